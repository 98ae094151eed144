#include "doctest.h"

#include <random>
#include <string>

#include "support.hpp"
#include "vlc/formula.hpp"

using namespace vlc;
using vlc::testing::assignment_from_mask;
using vlc::testing::random_formula;
using vlc::testing::share;
using vlc::testing::var_names;

TEST_SUITE_BEGIN("formula");

TEST_CASE("parse xor shape") {
    auto f = parse_formula("(a & !b) | (!a & b)");
    const auto& root = f.node(f.root());
    REQUIRE(root.kind == Formula::Kind::Or);
    REQUIRE(root.kids.size() == 2);
    const auto& left = f.node(root.kids[0]);
    CHECK(left.kind == Formula::Kind::And);
    CHECK(f.node(left.kids[0]).kind == Formula::Kind::Var);
    CHECK(f.vars().name(f.node(left.kids[0]).var) == "a");
    CHECK(f.node(left.kids[1]).kind == Formula::Kind::Not);
    const auto& right = f.node(root.kids[1]);
    CHECK(right.kind == Formula::Kind::And);
    CHECK(f.node(right.kids[0]).kind == Formula::Kind::Not);
}

TEST_CASE("parse constants") {
    auto f = parse_formula("true");
    CHECK(f.node(f.root()).kind == Formula::Kind::Const);
    CHECK(f.node(f.root()).value == true);
    auto g = parse_formula("false");
    CHECK(g.node(g.root()).value == false);
}

TEST_CASE("truncated input reports offset") {
    try {
        parse_formula("a &");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset() == 3);
        CHECK(!e.expected().empty());
    }
}

TEST_CASE("empty and malformed inputs") {
    CHECK_THROWS_AS(parse_formula(""), SyntaxError);
    CHECK_THROWS_AS(parse_formula("a $ b"), SyntaxError);
    CHECK_THROWS_AS(parse_formula("(a"), SyntaxError);
    CHECK_THROWS_AS(parse_formula("a b"), SyntaxError);
    CHECK_THROWS_AS(parse_formula("a - b"), SyntaxError);
    CHECK_THROWS_AS(parse_formula("a < b"), SyntaxError);
}

TEST_CASE("precedence and associativity") {
    // ! > & > ^ > | > -> > <->
    auto f = parse_formula("!a & b ^ c | d -> e <-> g");
    CHECK(f.node(f.root()).kind == Formula::Kind::Iff);
    auto lhs = f.node(f.node(f.root()).kids[0]);
    CHECK(lhs.kind == Formula::Kind::Implies);

    // -> is right-associative
    auto g = parse_formula("a -> b -> c");
    const auto& groot = g.node(g.root());
    CHECK(groot.kind == Formula::Kind::Implies);
    CHECK(g.node(groot.kids[0]).kind == Formula::Kind::Var);
    CHECK(g.node(groot.kids[1]).kind == Formula::Kind::Implies);

    // runs of & collect into one n-ary node
    auto h = parse_formula("a & b & c & d");
    CHECK(h.node(h.root()).kind == Formula::Kind::And);
    CHECK(h.node(h.root()).kids.size() == 4);

    // ^ folds left
    auto x = parse_formula("a ^ b ^ c");
    const auto& xroot = x.node(x.root());
    CHECK(xroot.kind == Formula::Kind::Xor);
    CHECK(x.node(xroot.kids[0]).kind == Formula::Kind::Xor);
}

TEST_CASE("variable indices in first-appearance order") {
    auto f = parse_formula("b & a & b");
    CHECK(f.vars().name(0) == "b");
    CHECK(f.vars().name(1) == "a");
}

TEST_CASE("desugar xor") {
    auto f = desugar(Formula::xor_of(Formula::var("a"), Formula::var("b")));
    auto expect = parse_formula("(a & !b) | (!a & b)");
    CHECK(f.same_structure(expect));
}

TEST_CASE("desugar implies") {
    auto f = desugar(Formula::implies(Formula::var("p"), Formula::var("q")));
    auto expect = parse_formula("!p | q");
    CHECK(f.same_structure(expect));
}

TEST_CASE("desugar iff then evaluate") {
    auto f = desugar(Formula::iff(Formula::var("a"), Formula::var("a")));
    auto tbl = share(f.vars());
    CHECK(eval_formula(f, assignment_from_mask(tbl, 1)) == true);
    CHECK(eval_formula(f, assignment_from_mask(tbl, 0)) == true);
}

TEST_CASE("desugar leaves only basic kinds") {
    std::mt19937_64 rng(11);
    auto names = var_names(5);
    for (int i = 0; i < 50; ++i) {
        auto f = desugar(random_formula(rng, names, 25));
        for (const auto& n : f.nodes()) {
            bool basic = n.kind == Formula::Kind::Const || n.kind == Formula::Kind::Var ||
                         n.kind == Formula::Kind::Not || n.kind == Formula::Kind::And ||
                         n.kind == Formula::Kind::Or;
            CHECK(basic);
        }
    }
}

TEST_CASE("free_vars examples") {
    auto f = parse_formula("(a & !b) | (!a & b)");
    auto fv = free_vars(f);
    REQUIRE(fv.size() == 2);
    CHECK(f.vars().name(fv[0]) == "a");
    CHECK(f.vars().name(fv[1]) == "b");

    CHECK(free_vars(Formula::constant(true)).empty());

    auto g = Formula::and_of({Formula::var("b"), Formula::var("a"), Formula::var("b")});
    auto gv = free_vars(g);
    REQUIRE(gv.size() == 2);
    CHECK(g.vars().name(gv[0]) == "b");
    CHECK(g.vars().name(gv[1]) == "a");
}

TEST_CASE("free_vars matches table order") {
    std::mt19937_64 rng(7);
    auto names = var_names(6);
    for (int i = 0; i < 100; ++i) {
        auto f = random_formula(rng, names, 30);
        auto fv = free_vars(f);
        REQUIRE(fv.size() == f.vars().size());
        for (std::size_t k = 0; k < fv.size(); ++k) CHECK(fv[k] == k);
    }
}

TEST_CASE("eval xor form") {
    auto f = parse_formula("(a & !b) | (!a & b)");
    auto tbl = share(f.vars());
    CHECK(eval_formula(f, assignment_from_mask(tbl, 0b01)) == true);   // a=1,b=0
    CHECK(eval_formula(f, assignment_from_mask(tbl, 0b11)) == false);  // a=1,b=1
}

TEST_CASE("eval pairwise relational clause") {
    // One clause of the relational check: different shapes or same color.
    auto clause = parse_formula(
        "!((S_1_circle & S_2_circle) | (S_1_square & S_2_square) | "
        "(S_1_triangle & S_2_triangle)) | "
        "((K_1_red & K_2_red) | (K_1_yellow & K_2_yellow) | (K_1_blue & K_2_blue))");
    auto tbl = share(clause.vars());
    Assignment w(tbl);
    // both circles, one red and one blue: same shape, different color
    w.set("S_1_circle", true);
    w.set("S_2_circle", true);
    w.set("K_1_red", true);
    w.set("K_2_blue", true);
    CHECK(eval_formula(clause, w) == false);
    // direct truth-table oracle: shapes equal and colors differ fails the clause
    bool same_shape = true, same_color = false;
    CHECK((!same_shape || same_color) == false);
}

TEST_CASE("eval rejects undeclared variables") {
    auto f = parse_formula("a & b");
    VarTable small;
    small.intern("a");
    Assignment w(std::make_shared<VarTable>(small));
    CHECK_THROWS_AS(eval_formula(f, w), UndeclaredVariable);
}

TEST_CASE("round-trip through canonical printer") {
    std::mt19937_64 rng(42);
    auto names = var_names(6);
    for (int i = 0; i < 300; ++i) {
        auto f = random_formula(rng, names, 24);
        auto g = parse_formula(f.to_string());
        CHECK(f.same_structure(g));
    }
}

TEST_CASE("desugar soundness, exhaustive") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 120; ++trial) {
        std::uniform_int_distribution<int> nvars_pick(1, 10);
        auto names = var_names(nvars_pick(rng));
        auto f = random_formula(rng, names, 20);
        auto g = desugar(f);
        auto tbl = share(f.vars());
        auto n = f.vars().size();
        for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
            auto w = assignment_from_mask(tbl, mask);
            CHECK(eval_formula(f, w) == eval_formula(g, w));
        }
    }
}

TEST_CASE("parser totality on fuzzed inputs") {
    std::mt19937_64 rng(99);
    const char charset[] = "ab !&^|<->()true+false\t\n_0123456789";
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<std::size_t> len_pick(0, trial < 190 ? 200 : 65536);
        std::string text(len_pick(rng), ' ');
        std::uniform_int_distribution<std::size_t> ch(0, sizeof(charset) - 2);
        for (auto& c : text) c = charset[ch(rng)];
        try {
            parse_formula(text);
        } catch (const SyntaxError&) {
            // classified failure is fine; anything else is not
        }
    }
    // pathological nesting stays a SyntaxError, not a crash
    std::string deep(65536, '(');
    CHECK_THROWS_AS(parse_formula(deep), SyntaxError);
    std::string bangs(65536, '!');
    bangs += "a";
    CHECK_THROWS_AS(parse_formula(bangs), SyntaxError);
}

TEST_SUITE_END();
