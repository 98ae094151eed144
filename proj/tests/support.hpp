#pragma once

// Shared helpers for the test suites: deterministic random formulas and
// exhaustive assignment enumeration.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vlc/formula.hpp"

namespace vlc::testing {

inline std::shared_ptr<const VarTable> share(const VarTable& t) {
    return std::make_shared<VarTable>(t);
}

// Assignment over `vars` with variable i set to bit i of `mask`.
inline Assignment assignment_from_mask(const std::shared_ptr<const VarTable>& vars,
                                       std::uint64_t mask) {
    Assignment w(vars);
    for (VarId v = 0; v < vars->size(); ++v) {
        w.set(v, (mask >> v) & 1);
    }
    return w;
}

// Random formula over the given variable names. `budget` bounds the node
// count, so generated trees stay small enough for exhaustive checks.
inline Formula random_formula(std::mt19937_64& rng,
                              const std::vector<std::string>& names, int budget) {
    std::uniform_int_distribution<int> kind_pick(0, 9);
    if (budget <= 1) {
        if (kind_pick(rng) == 0) {
            return Formula::constant(rng() & 1);
        }
        std::uniform_int_distribution<std::size_t> var_pick(0, names.size() - 1);
        return Formula::var(names[var_pick(rng)]);
    }
    switch (kind_pick(rng)) {
        case 0:
        case 1:
            return !random_formula(rng, names, budget - 1);
        case 2:
        case 3: {
            std::uniform_int_distribution<int> arity_pick(2, 3);
            int arity = arity_pick(rng);
            std::vector<Formula> kids;
            for (int i = 0; i < arity; ++i) {
                kids.push_back(random_formula(rng, names, (budget - 1) / arity));
            }
            return Formula::and_of(std::move(kids));
        }
        case 4:
        case 5: {
            std::uniform_int_distribution<int> arity_pick(2, 3);
            int arity = arity_pick(rng);
            std::vector<Formula> kids;
            for (int i = 0; i < arity; ++i) {
                kids.push_back(random_formula(rng, names, (budget - 1) / arity));
            }
            return Formula::or_of(std::move(kids));
        }
        case 6:
            return Formula::xor_of(random_formula(rng, names, (budget - 1) / 2),
                                   random_formula(rng, names, (budget - 1) / 2));
        case 7:
            return Formula::implies(random_formula(rng, names, (budget - 1) / 2),
                                    random_formula(rng, names, (budget - 1) / 2));
        case 8:
            return Formula::iff(random_formula(rng, names, (budget - 1) / 2),
                                random_formula(rng, names, (budget - 1) / 2));
        default: {
            std::uniform_int_distribution<std::size_t> var_pick(0, names.size() - 1);
            return Formula::var(names[var_pick(rng)]);
        }
    }
}

inline std::vector<std::string> var_names(int n, const std::string& prefix = "v") {
    std::vector<std::string> names;
    names.reserve(n);
    for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}

// n1 ^ n2 ^ ... folded left, the chain shape used by the xor task.
inline Formula parity_formula(const std::vector<std::string>& names) {
    Formula acc = Formula::var(names[0]);
    for (std::size_t i = 1; i < names.size(); ++i) {
        acc = Formula::xor_of(std::move(acc), Formula::var(names[i]));
    }
    return acc;
}

}  // namespace vlc::testing
