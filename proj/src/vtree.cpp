#include "vlc/vtree.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

namespace vlc {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::shared_ptr<const VarTable> intern_distinct(const std::vector<std::string>& names) {
    if (names.empty()) throw EmptyVariableSet();
    auto table = std::make_shared<VarTable>();
    for (const auto& name : names) {
        if (table->find(name)) throw DuplicateVariable(name);
        table->intern(name);
    }
    return table;
}

}  // namespace

// Builds the node array over a leaf order; `split` maps a slice length >= 2
// to the number of leaves placed on the left.
class VTreeBuilder {
public:
    static VTree run(std::shared_ptr<const VarTable> vars,
                     const std::vector<VarId>& leaf_order,
                     const std::function<std::uint32_t(std::uint32_t)>& split) {
        VTree t;
        t.vars_ = std::move(vars);
        t.nodes_.resize(2 * leaf_order.size() - 1);
        t.leaf_of_.resize(leaf_order.size());
        t.root_ = place(t, leaf_order, 0, static_cast<std::uint32_t>(leaf_order.size()),
                        0, split);
        return t;
    }

    static const std::vector<VTree::Node>& nodes(const VTree& t) { return t.nodes_; }

private:
    static VTree::NodeId place(VTree& t, const std::vector<VarId>& leaves,
                               std::uint32_t first, std::uint32_t count,
                               VTree::NodeId base,
                               const std::function<std::uint32_t(std::uint32_t)>& split) {
        // A slice of k leaves occupies the id interval [base, base + 2k - 2].
        VTree::Node node;
        node.lo = base;
        node.hi = base + 2 * count - 2;
        node.leaf_count = count;
        if (count == 1) {
            node.leaf = true;
            node.var = leaves[first];
            t.nodes_[base] = node;
            t.leaf_of_[node.var] = base;
            return base;
        }
        std::uint32_t left_count = split(count);
        VTree::NodeId id = base + 2 * left_count - 1;
        node.left = place(t, leaves, first, left_count, base, split);
        node.right = place(t, leaves, first + left_count, count - left_count, id + 1, split);
        t.nodes_[id] = node;
        t.nodes_[node.left].parent = id;
        t.nodes_[node.right].parent = id;
        return id;
    }
};

VTree VTree::right_linear(const std::vector<std::string>& names) {
    auto table = intern_distinct(names);
    std::vector<VarId> order(names.size());
    for (VarId v = 0; v < order.size(); ++v) order[v] = v;
    return VTreeBuilder::run(table, order, [](std::uint32_t) { return 1u; });
}

VTree VTree::balanced(const std::vector<std::string>& names) {
    auto table = intern_distinct(names);
    std::vector<VarId> order(names.size());
    for (VarId v = 0; v < order.size(); ++v) order[v] = v;
    return VTreeBuilder::run(table, order,
                             [](std::uint32_t count) { return (count + 1) / 2; });
}

VTree VTree::random(const std::vector<std::string>& names, std::uint64_t seed) {
    auto table = intern_distinct(names);
    std::vector<VarId> order(names.size());
    for (VarId v = 0; v < order.size(); ++v) order[v] = v;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return VTreeBuilder::run(table, order, [&rng](std::uint32_t count) {
        std::uniform_int_distribution<std::uint32_t> pick(1, count - 1);
        return pick(rng);
    });
}

const VTree::Node& VTree::node(NodeId id) const {
    if (id >= nodes_.size()) throw InvalidNodeId(id);
    return nodes_[id];
}

bool VTree::is_ancestor(NodeId above, NodeId below) const {
    if (above >= nodes_.size()) throw InvalidNodeId(above);
    if (below >= nodes_.size()) throw InvalidNodeId(below);
    return nodes_[above].lo <= below && below <= nodes_[above].hi;
}

VTree::NodeId VTree::lca(NodeId a, NodeId b) const {
    if (a >= nodes_.size()) throw InvalidNodeId(a);
    if (b >= nodes_.size()) throw InvalidNodeId(b);
    while (!(nodes_[a].lo <= b && b <= nodes_[a].hi)) {
        a = nodes_[a].parent;
    }
    return a;
}

int VTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    std::vector<NodeId> stack{root_};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        const auto& n = nodes_[id];
        if (n.leaf) {
            best = std::max(best, d[id]);
            continue;
        }
        d[n.left] = d[id] + 1;
        d[n.right] = d[id] + 1;
        stack.push_back(n.left);
        stack.push_back(n.right);
    }
    return best;
}

std::string VTree::dump() const {
    std::ostringstream os;
    os << "vtree " << nodes_.size() << " " << root_ << "\n";
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        const auto& n = nodes_[id];
        if (n.leaf) {
            os << "L " << id << " " << vars_->name(n.var) << "\n";
        } else {
            os << "I " << id << " " << n.left << " " << n.right << "\n";
        }
    }
    return os.str();
}

VTree VTree::parse_dump(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string tag;
    std::size_t count = 0;
    NodeId root = 0;
    if (!(is >> tag >> count >> root) || tag != "vtree" || count == 0 || count % 2 == 0) {
        throw FormatError("vtree dump: bad header");
    }
    struct Raw {
        bool leaf;
        std::string var;
        NodeId left, right;
    };
    std::vector<Raw> raw(count);
    std::vector<bool> seen(count, false);
    for (std::size_t i = 0; i < count; ++i) {
        NodeId id;
        if (!(is >> tag >> id) || id >= count || seen[id]) {
            throw FormatError("vtree dump: bad node line");
        }
        seen[id] = true;
        if (tag == "L") {
            std::string name;
            if (!(is >> name)) throw FormatError("vtree dump: bad leaf line");
            raw[id] = {true, std::move(name), 0, 0};
        } else if (tag == "I") {
            NodeId l, r;
            if (!(is >> l >> r) || l >= count || r >= count) {
                throw FormatError("vtree dump: bad internal line");
            }
            raw[id] = {false, {}, l, r};
        } else {
            throw FormatError("vtree dump: unknown node tag '" + tag + "'");
        }
    }
    if (root >= count) throw FormatError("vtree dump: bad root id");

    // Recover the leaf order and split sizes, then rebuild through the
    // canonical constructor so every derived array is consistent.
    std::vector<std::string> leaf_names;
    std::vector<bool> visited(count, false);
    std::function<std::uint32_t(NodeId)> collect = [&](NodeId id) -> std::uint32_t {
        if (visited[id]) throw FormatError("vtree dump: node reachable twice");
        visited[id] = true;
        if (raw[id].leaf) {
            leaf_names.push_back(raw[id].var);
            return 1;
        }
        auto l = collect(raw[id].left);
        auto r = collect(raw[id].right);
        return l + r;
    };
    std::vector<std::uint32_t> splits;  // left leaf counts in pre-order
    std::function<std::uint32_t(NodeId)> sizes = [&](NodeId id) -> std::uint32_t {
        if (raw[id].leaf) return 1;
        splits.push_back(0);
        auto slot = splits.size() - 1;
        auto l = sizes(raw[id].left);
        splits[slot] = l;
        return l + sizes(raw[id].right);
    };
    if (collect(root) * 2 - 1 != count) {
        throw FormatError("vtree dump: node count does not match tree");
    }
    sizes(root);

    auto table = intern_distinct(leaf_names);
    std::vector<VarId> order(leaf_names.size());
    for (VarId v = 0; v < order.size(); ++v) order[v] = v;
    std::size_t cursor = 0;
    auto rebuilt = VTreeBuilder::run(table, order,
                                     [&](std::uint32_t) { return splits[cursor++]; });
    // Rebuilding from pre-order splits reproduces the in-order ids; if the
    // file disagrees, its ids were not in-order positions.
    for (NodeId id = 0; id < count; ++id) {
        const auto& n = VTreeBuilder::nodes(rebuilt)[id];
        if (n.leaf != raw[id].leaf ||
            (!n.leaf && (n.left != raw[id].left || n.right != raw[id].right)) ||
            (n.leaf && rebuilt.vars().name(n.var) != raw[id].var)) {
            throw FormatError("vtree dump: ids are not in-order positions");
        }
    }
    if (rebuilt.root() != root) throw FormatError("vtree dump: root mismatch");
    return rebuilt;
}

std::uint64_t VTree::structural_hash() const { return fnv1a64(dump()); }

}  // namespace vlc
