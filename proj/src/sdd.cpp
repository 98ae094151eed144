#include "vlc/sdd.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace vlc {

namespace {

std::atomic<std::uint32_t> manager_serial{1};

std::uint64_t elems_hash(VTree::NodeId v, std::span<const std::uint32_t> flat) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ v;
    for (auto x : flat) {
        h ^= x;
        h *= 0x100000001b3ULL;
        h ^= h >> 29;
    }
    return h;
}

}  // namespace

Manager::Manager(VTree vtree, std::size_t node_limit)
    : vtree_(std::move(vtree)),
      serial_(manager_serial.fetch_add(1)),
      node_limit_(std::min<std::size_t>(node_limit, 1u << 30)) {
    nodes_.reserve(2 + 2 * vtree_.var_count());
    Node false_node;
    false_node.kind = NodeKind::False;
    Node true_node;
    true_node.kind = NodeKind::True;
    nodes_.push_back(std::move(false_node));
    nodes_.push_back(std::move(true_node));
    nodes_[kFalse].negation = kTrue;
    nodes_[kTrue].negation = kFalse;
    // literals are interned eagerly: ids 2+2v (positive), 3+2v (negative)
    for (VarId v = 0; v < vtree_.var_count(); ++v) {
        Node pos;
        pos.kind = NodeKind::Literal;
        pos.var = v;
        pos.positive = true;
        pos.vtree_node = vtree_.leaf_of(v);
        Node neg = pos;
        neg.positive = false;
        nodes_.push_back(std::move(pos));
        nodes_.push_back(std::move(neg));
        nodes_[2 + 2 * v].negation = 3 + 2 * v;
        nodes_[3 + 2 * v].negation = 2 + 2 * v;
    }
}

std::uint32_t Manager::check(SddRef r) const {
    if (r.owner != serial_ || r.id >= nodes_.size()) throw ForeignHandle();
    return r.id;
}

SddRef Manager::literal(VarId var, bool positive) const {
    if (var >= vtree_.var_count()) {
        throw UnknownVariable("#" + std::to_string(var));
    }
    return {(positive ? 2u : 3u) + 2 * var, serial_};
}

SddRef Manager::literal(std::string_view name, bool positive) const {
    auto id = vars().find(name);
    if (!id) throw UnknownVariable(std::string(name));
    return literal(*id, positive);
}

std::uint32_t Manager::new_node(Node n) {
    if (nodes_.size() >= node_limit_) throw ResourceLimit(node_limit_);
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

// Canonicalizes an element list (compress, trim, sort) and interns it.
std::uint32_t Manager::make_decision(VTree::NodeId v, std::vector<Element> elems) {
    assert(!elems.empty());
    // compression: elements sharing a sub merge by disjoining their primes
    std::vector<Element> merged;
    merged.reserve(elems.size());
    for (const auto& e : elems) {
        if (e.prime == kFalse) continue;
        bool joined = false;
        for (auto& m : merged) {
            if (m.sub == e.sub) {
                m.prime = apply_rec(false, m.prime, e.prime);
                joined = true;
                break;
            }
        }
        if (!joined) merged.push_back(e);
    }
    // trimming
    if (merged.size() == 1) {
        assert(merged[0].prime == kTrue);
        return merged[0].sub;
    }
    if (merged.size() == 2) {
        Element* with_true = nullptr;
        Element* with_false = nullptr;
        for (auto& m : merged) {
            if (m.sub == kTrue) with_true = &m;
            if (m.sub == kFalse) with_false = &m;
        }
        if (with_true && with_false) {
            // the two primes are complementary; remember that while here
            nodes_[with_true->prime].negation = with_false->prime;
            nodes_[with_false->prime].negation = with_true->prime;
            return with_true->prime;
        }
    }
    std::sort(merged.begin(), merged.end(),
              [](const Element& a, const Element& b) { return a.prime < b.prime; });

    std::vector<std::uint32_t> flat;
    flat.reserve(2 * merged.size());
    for (const auto& e : merged) {
        flat.push_back(e.prime);
        flat.push_back(e.sub);
    }
    auto h = elems_hash(v, flat);
    for (auto cand : unique_[h]) {
        const auto& n = nodes_[cand];
        if (n.vtree_node == v && n.elements == merged) return cand;
    }
    Node node;
    node.kind = NodeKind::Decision;
    node.vtree_node = v;
    node.elements = std::move(merged);
    auto id = new_node(std::move(node));
    unique_[h].push_back(id);
    return id;
}

void Manager::expand_at(std::uint32_t x, VTree::NodeId v, std::vector<Element>& out) {
    const Node& n = nodes_[x];
    if (n.kind == NodeKind::Decision && n.vtree_node == v) {
        out = n.elements;
        return;
    }
    const auto& vn = vtree_.node(v);
    if (vtree_.is_ancestor(vn.left, n.vtree_node)) {
        out = {{x, kTrue}, {negate_rec(x), kFalse}};
    } else {
        assert(vtree_.is_ancestor(vn.right, n.vtree_node));
        out = {{kTrue, x}};
    }
}

std::uint32_t Manager::apply_rec(bool conj, std::uint32_t x, std::uint32_t y) {
    if (x == y) return x;
    if (conj) {
        if (x == kFalse || y == kFalse) return kFalse;
        if (x == kTrue) return y;
        if (y == kTrue) return x;
    } else {
        if (x == kTrue || y == kTrue) return kTrue;
        if (x == kFalse) return y;
        if (y == kFalse) return x;
    }
    if (nodes_[x].negation == y) return conj ? kFalse : kTrue;
    if (x > y) std::swap(x, y);
    std::uint64_t key = (static_cast<std::uint64_t>(conj) << 62) |
                        (static_cast<std::uint64_t>(x) << 31) | y;
    if (auto it = apply_cache_.find(key); it != apply_cache_.end()) return it->second;

    VTree::NodeId v = vtree_.lca(nodes_[x].vtree_node, nodes_[y].vtree_node);
    assert(!vtree_.node(v).leaf);
    std::vector<Element> ex, ey;
    expand_at(x, v, ex);
    expand_at(y, v, ey);
    std::vector<Element> out;
    out.reserve(ex.size() * ey.size());
    for (const auto& a : ex) {
        for (const auto& b : ey) {
            auto p = apply_rec(true, a.prime, b.prime);
            if (p == kFalse) continue;
            auto s = apply_rec(conj, a.sub, b.sub);
            out.push_back({p, s});
        }
    }
    auto r = make_decision(v, std::move(out));
    apply_cache_.emplace(key, r);
    return r;
}

std::uint32_t Manager::negate_rec(std::uint32_t x) {
    if (nodes_[x].negation != kNoId) return nodes_[x].negation;
    // only decision nodes get here; terminals and literals are pre-linked
    assert(nodes_[x].kind == NodeKind::Decision);
    std::vector<Element> elems = nodes_[x].elements;
    for (auto& e : elems) e.sub = negate_rec(e.sub);
    auto r = make_decision(nodes_[x].vtree_node, std::move(elems));
    nodes_[x].negation = r;
    nodes_[r].negation = x;
    return r;
}

SddRef Manager::apply(Op op, SddRef x, SddRef y) {
    auto xi = check(x);
    auto yi = check(y);
    return {apply_rec(op == Op::And, xi, yi), serial_};
}

SddRef Manager::negate(SddRef x) { return {negate_rec(check(x)), serial_}; }

SddRef Manager::compile(const Formula& f0) {
    Formula f = desugar(f0);
    std::vector<std::uint32_t> lit(f.vars().size());
    for (VarId v = 0; v < f.vars().size(); ++v) {
        auto id = vars().find(f.vars().name(v));
        if (!id) throw UnknownVariable(f.vars().name(v));
        lit[v] = 2 + 2 * *id;
    }
    std::vector<std::uint32_t> result(f.nodes().size());
    for (std::uint32_t i = 0; i < f.nodes().size(); ++i) {
        const auto& n = f.nodes()[i];
        switch (n.kind) {
            case Formula::Kind::Const:
                result[i] = n.value ? kTrue : kFalse;
                break;
            case Formula::Kind::Var:
                result[i] = lit[n.var];
                break;
            case Formula::Kind::Not:
                result[i] = negate_rec(result[n.kids[0]]);
                break;
            case Formula::Kind::And:
            case Formula::Kind::Or: {
                bool conj = n.kind == Formula::Kind::And;
                auto acc = result[n.kids[0]];
                for (std::size_t k = 1; k < n.kids.size(); ++k) {
                    acc = apply_rec(conj, acc, result[n.kids[k]]);
                }
                result[i] = acc;
                break;
            }
            default:
                assert(false && "desugar left a sugared node");
        }
    }
    return {result[f.root()], serial_};
}

// --------------------------------------------------------------- evaluation

std::vector<std::uint8_t> Manager::resolve_assignment(const Assignment& w) const {
    std::vector<std::uint8_t> var_val(vtree_.var_count());
    if (w.vars_ptr() == vars_ptr()) {
        for (VarId v = 0; v < var_val.size(); ++v) var_val[v] = w[v] ? 1 : 0;
        return var_val;
    }
    for (VarId v = 0; v < var_val.size(); ++v) {
        const auto& name = vars().name(v);
        auto id = w.vars().find(name);
        if (!id) throw IncompleteAssignment(name);
        var_val[v] = w[*id] ? 1 : 0;
    }
    return var_val;
}

bool Manager::eval_rec(std::uint32_t x, const std::vector<std::uint8_t>& var_val,
                       std::vector<std::uint8_t>& memo) const {
    if (x == kFalse) return false;
    if (x == kTrue) return true;
    if (memo[x] != 2) return memo[x] != 0;
    const Node& n = nodes_[x];
    bool val = false;
    if (n.kind == NodeKind::Literal) {
        val = n.positive == (var_val[n.var] != 0);
    } else {
        for (const auto& e : n.elements) {
            if (eval_rec(e.prime, var_val, memo)) {
                val = eval_rec(e.sub, var_val, memo);
                break;  // primes are mutually exclusive
            }
        }
    }
    memo[x] = val ? 1 : 0;
    return val;
}

bool Manager::evaluate(SddRef x, const Assignment& w) const {
    auto xi = check(x);
    auto var_val = resolve_assignment(w);
    std::vector<std::uint8_t> memo(nodes_.size(), 2);
    return eval_rec(xi, var_val, memo);
}

std::vector<bool> Manager::evaluate_many(std::span<const SddRef> roots,
                                         const Assignment& w) const {
    auto var_val = resolve_assignment(w);
    std::vector<std::uint8_t> memo(nodes_.size(), 2);
    std::vector<bool> out;
    out.reserve(roots.size());
    for (auto r : roots) out.push_back(eval_rec(check(r), var_val, memo));
    return out;
}

// ------------------------------------------------------------ model counting

BigCount Manager::model_count(SddRef x, const std::vector<VarId>& over) const {
    auto xi = check(x);
    std::vector<std::uint8_t> in_over(vtree_.var_count(), 0);
    for (auto v : over) {
        if (v >= vtree_.var_count()) throw VariableNotCovered("#" + std::to_string(v));
        in_over[v] = 1;
    }
    std::size_t over_size = 0;
    for (auto b : in_over) over_size += b;

    // every structurally appearing variable must be inside `over`
    {
        std::vector<std::uint8_t> seen(nodes_.size(), 0);
        std::vector<std::uint32_t> stack{xi};
        while (!stack.empty()) {
            auto id = stack.back();
            stack.pop_back();
            if (seen[id]) continue;
            seen[id] = 1;
            const auto& n = nodes_[id];
            if (n.kind == NodeKind::Literal && !in_over[n.var]) {
                throw VariableNotCovered(vars().name(n.var));
            }
            for (const auto& e : n.elements) {
                stack.push_back(e.prime);
                stack.push_back(e.sub);
            }
        }
    }

    if (xi == kFalse) return 0;
    if (xi == kTrue) return BigCount(1) << over_size;

    // exact count over the variables of the node's own vtree subtree;
    // variables skipped on the way down contribute a factor 2 each
    std::unordered_map<std::uint32_t, BigCount> memo;
    auto scope_vars = [&](VTree::NodeId v) { return vtree_.node(v).leaf_count; };

    std::function<BigCount(std::uint32_t)> count_node = [&](std::uint32_t id) -> BigCount {
        if (auto it = memo.find(id); it != memo.end()) return it->second;
        const Node& n = nodes_[id];
        BigCount total = 0;
        if (n.kind == NodeKind::Literal) {
            total = 1;
        } else {
            const auto& vn = vtree_.node(n.vtree_node);
            auto scaled = [&](std::uint32_t sid, VTree::NodeId scope) -> BigCount {
                if (sid == kFalse) return 0;
                if (sid == kTrue) return BigCount(1) << scope_vars(scope);
                return count_node(sid)
                       << (scope_vars(scope) - scope_vars(nodes_[sid].vtree_node));
            };
            for (const auto& e : n.elements) {
                total += scaled(e.prime, vn.left) * scaled(e.sub, vn.right);
            }
        }
        memo.emplace(id, total);
        return total;
    };

    const Node& root_node = nodes_[xi];
    BigCount c = count_node(xi);
    const auto& vn = vtree_.node(root_node.vtree_node);
    // vars under the node's subtree but outside `over` are unused: divide out;
    // vars in `over` outside the subtree double the count
    std::size_t under_in_over = 0;
    for (VarId v = 0; v < vtree_.var_count(); ++v) {
        auto leaf = vtree_.leaf_of(v);
        if (in_over[v] && vn.lo <= leaf && leaf <= vn.hi) ++under_in_over;
    }
    c >>= (vn.leaf_count - under_in_over);
    c <<= (over_size - under_in_over);
    return c;
}

std::pair<std::size_t, std::size_t> Manager::size(SddRef x) const {
    auto xi = check(x);
    std::vector<std::uint8_t> seen(nodes_.size(), 0);
    std::vector<std::uint32_t> stack{xi};
    std::size_t node_count = 0, edge_count = 0;
    while (!stack.empty()) {
        auto id = stack.back();
        stack.pop_back();
        if (seen[id]) continue;
        seen[id] = 1;
        ++node_count;
        for (const auto& e : nodes_[id].elements) {
            edge_count += 2;
            stack.push_back(e.prime);
            stack.push_back(e.sub);
        }
    }
    return {node_count, edge_count};
}

Manager::NodeView Manager::view(SddRef x) const {
    auto xi = check(x);
    const Node& n = nodes_[xi];
    NodeView out;
    out.kind = n.kind;
    out.var = n.var;
    out.positive = n.positive;
    out.vtree_node = n.vtree_node;
    out.elements.reserve(n.elements.size());
    for (const auto& e : n.elements) {
        out.elements.push_back({SddRef{e.prime, serial_}, SddRef{e.sub, serial_}});
    }
    return out;
}

// ------------------------------------------------------------ serialization

std::string Manager::serialize_circuit(SddRef x) const {
    auto xi = check(x);
    // post-order over the reachable DAG so ids come out topologically sorted
    std::vector<std::uint32_t> order;
    std::vector<std::uint8_t> state(nodes_.size(), 0);
    std::vector<std::uint32_t> stack{xi};
    while (!stack.empty()) {
        auto id = stack.back();
        if (state[id] == 2) {
            stack.pop_back();
            continue;
        }
        if (state[id] == 1) {
            state[id] = 2;
            order.push_back(id);
            stack.pop_back();
            continue;
        }
        state[id] = 1;
        for (const auto& e : nodes_[id].elements) {
            if (!state[e.prime]) stack.push_back(e.prime);
            if (!state[e.sub]) stack.push_back(e.sub);
        }
    }
    std::vector<std::uint32_t> file_id(nodes_.size(), kNoId);
    std::ostringstream os;
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(vtree_.structural_hash()));
    os << "sdd " << order.size() << " vtree=" << hash_hex << "\n";
    for (std::uint32_t i = 0; i < order.size(); ++i) {
        auto id = order[i];
        file_id[id] = i;
        const Node& n = nodes_[id];
        switch (n.kind) {
            case NodeKind::False: os << "F\n"; break;
            case NodeKind::True: os << "T\n"; break;
            case NodeKind::Literal:
                os << "L " << i << " " << vars().name(n.var) << " "
                   << (n.positive ? 1 : 0) << "\n";
                break;
            case NodeKind::Decision:
                os << "D " << i << " " << n.vtree_node << " " << n.elements.size();
                for (const auto& e : n.elements) {
                    os << " " << file_id[e.prime] << " " << file_id[e.sub];
                }
                os << "\n";
                break;
        }
    }
    return os.str();
}

SddRef Manager::deserialize_circuit(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    if (!std::getline(is, line)) throw FormatError("circuit: empty input");
    std::istringstream hs(line);
    std::string tag, vp;
    std::size_t count = 0;
    if (!(hs >> tag >> count >> vp) || tag != "sdd" || count == 0 ||
        vp.rfind("vtree=", 0) != 0) {
        throw FormatError("circuit: bad header");
    }
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(vtree_.structural_hash()));
    if (vp.substr(6) != hash_hex) throw VtreeMismatch();

    std::vector<std::uint32_t> by_file;
    by_file.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw FormatError("circuit: truncated");
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) throw FormatError("circuit: blank node line");
        if (kind == "F") {
            by_file.push_back(kFalse);
        } else if (kind == "T") {
            by_file.push_back(kTrue);
        } else if (kind == "L") {
            std::size_t idx;
            std::string name;
            int pol;
            if (!(ls >> idx >> name >> pol) || idx != i || (pol != 0 && pol != 1)) {
                throw FormatError("circuit: bad literal line");
            }
            auto var = vars().find(name);
            if (!var) throw FormatError("circuit: unknown variable " + name);
            by_file.push_back((pol ? 2u : 3u) + 2 * *var);
        } else if (kind == "D") {
            std::size_t idx, k;
            VTree::NodeId v;
            if (!(ls >> idx >> v >> k) || idx != i || k == 0 ||
                v >= vtree_.node_count() || vtree_.node(v).leaf) {
                throw FormatError("circuit: bad decision line");
            }
            std::vector<Element> elems;
            elems.reserve(k);
            for (std::size_t e = 0; e < k; ++e) {
                std::size_t p, s;
                if (!(ls >> p >> s) || p >= i || s >= i) {
                    throw FormatError("circuit: bad element reference");
                }
                elems.push_back({by_file[p], by_file[s]});
            }
            std::string extra;
            if (ls >> extra) throw FormatError("circuit: trailing tokens");
            by_file.push_back(make_decision(v, std::move(elems)));
        } else {
            throw FormatError("circuit: unknown node tag '" + kind + "'");
        }
    }
    return {by_file.back(), serial_};
}

void Manager::save_circuit(const std::string& path, SddRef x) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << serialize_circuit(x);
    if (!out) throw IoError("write failed: " + path);
}

SddRef Manager::load_circuit(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_circuit(buf.str());
}

}  // namespace vlc
