#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vlc/errors.hpp"
#include "vlc/formula.hpp"

namespace vlc {

class DuplicateVariable : public Error {
public:
    explicit DuplicateVariable(const std::string& name)
        : Error("duplicate variable: " + name) {}
};

class EmptyVariableSet : public Error {
public:
    EmptyVariableSet() : Error("variable set is empty") {}
};

class InvalidNodeId : public Error {
public:
    explicit InvalidNodeId(std::uint32_t id)
        : Error("invalid vtree node id: " + std::to_string(id)) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Full binary tree over the variable set. Node ids follow in-order position
// (leaves even, internals odd), which makes every subtree a contiguous id
// interval and ancestor tests a constant-time range check.
class VTree {
public:
    using NodeId = std::uint32_t;
    static constexpr NodeId kNoNode = ~NodeId{0};

    struct Node {
        bool leaf = false;
        VarId var = 0;             // leaf only
        NodeId left = kNoNode;     // internal only
        NodeId right = kNoNode;
        NodeId parent = kNoNode;   // kNoNode at the root
        NodeId lo = 0, hi = 0;     // subtree id interval, inclusive
        std::uint32_t leaf_count = 0;
    };

    // Leftmost leaf is names[0]; every internal node's left child is a leaf.
    static VTree right_linear(const std::vector<std::string>& names);
    // Midpoint split (ceil on the left), depth <= ceil(log2 n) + 1.
    static VTree balanced(const std::vector<std::string>& names);
    // Uniformly shuffled order, then uniformly random recursive splits.
    // A pure function of (names, seed).
    static VTree random(const std::vector<std::string>& names, std::uint64_t seed);

    NodeId root() const { return root_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t var_count() const { return vars_->size(); }
    const Node& node(NodeId id) const;
    NodeId leaf_of(VarId v) const { return leaf_of_.at(v); }

    bool is_ancestor(NodeId above, NodeId below) const;  // ancestor-or-self
    NodeId lca(NodeId a, NodeId b) const;

    const VarTable& vars() const { return *vars_; }
    const std::shared_ptr<const VarTable>& vars_ptr() const { return vars_; }

    int depth() const;

    std::string dump() const;
    static VTree parse_dump(std::string_view text);
    std::uint64_t structural_hash() const;

private:
    friend class VTreeBuilder;
    VTree() = default;

    std::vector<Node> nodes_;
    NodeId root_ = 0;
    std::shared_ptr<const VarTable> vars_;
    std::vector<NodeId> leaf_of_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace vlc
