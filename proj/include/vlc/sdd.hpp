#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vlc/errors.hpp"
#include "vlc/formula.hpp"
#include "vlc/vtree.hpp"

namespace vlc {

class UnknownVariable : public Error {
public:
    explicit UnknownVariable(const std::string& name)
        : Error("variable not in vtree: " + name) {}
};

class ForeignHandle : public Error {
public:
    ForeignHandle() : Error("handle does not belong to this manager") {}
};

class IncompleteAssignment : public Error {
public:
    explicit IncompleteAssignment(const std::string& name)
        : Error("assignment does not cover variable: " + name) {}
};

class VariableNotCovered : public Error {
public:
    explicit VariableNotCovered(const std::string& name)
        : Error("count scope does not cover variable: " + name) {}
};

class VtreeMismatch : public Error {
public:
    VtreeMismatch() : Error("circuit was saved under a different vtree") {}
};

class ResourceLimit : public Error {
public:
    explicit ResourceLimit(std::size_t limit)
        : Error("node store limit exceeded (" + std::to_string(limit) + ")") {}
};

using BigCount = boost::multiprecision::cpp_int;

// Handle into a Manager's node store. Structurally equal circuits share one
// handle, so handle equality is logical equivalence under the same vtree.
struct SddRef {
    std::uint32_t id = 0;
    std::uint32_t owner = 0;
    bool operator==(const SddRef&) const = default;
};

// Hash-consed store of canonical decision-diagram nodes over a fixed vtree.
// Decision nodes keep their elements compressed (no repeated subs), trimmed
// (no {(true,s)} or {(p,true),(!p,false)} shapes) and sorted by prime handle,
// which makes compilation canonical: logically equivalent inputs come back
// as the same handle.
//
// Compilation and apply mutate the internal tables and must be externally
// serialized. evaluate / model_count / size / serialization only read the
// store and are safe to run concurrently once building is done.
class Manager {
public:
    enum class Op { And, Or };

    explicit Manager(VTree vtree, std::size_t node_limit = 1'000'000);

    Manager(const Manager&) = delete;
    Manager& operator=(const Manager&) = delete;

    const VTree& vtree() const { return vtree_; }
    const VarTable& vars() const { return vtree_.vars(); }
    const std::shared_ptr<const VarTable>& vars_ptr() const { return vtree_.vars_ptr(); }

    SddRef true_ref() const { return {kTrue, serial_}; }
    SddRef false_ref() const { return {kFalse, serial_}; }
    SddRef literal(VarId var, bool positive) const;
    SddRef literal(std::string_view name, bool positive) const;

    // Desugars, maps variables by name into the vtree, then folds bottom-up
    // through apply/negate. Throws UnknownVariable for names absent from the
    // vtree.
    SddRef compile(const Formula& f);

    SddRef apply(Op op, SddRef x, SddRef y);
    SddRef negate(SddRef x);

    bool evaluate(SddRef x, const Assignment& w) const;
    // One shared memo pass for several roots of the same manager.
    std::vector<bool> evaluate_many(std::span<const SddRef> roots,
                                    const Assignment& w) const;

    // Number of satisfying assignments over `over` (which must cover every
    // variable appearing in x; variables outside x contribute a factor 2).
    BigCount model_count(SddRef x, const std::vector<VarId>& over) const;

    // (node count, edge count) of the reachable DAG, terminals counted once.
    std::pair<std::size_t, std::size_t> size(SddRef x) const;

    std::string serialize_circuit(SddRef x) const;
    SddRef deserialize_circuit(std::string_view text);
    void save_circuit(const std::string& path, SddRef x) const;
    SddRef load_circuit(const std::string& path);

    void clear_apply_cache() { apply_cache_.clear(); }
    std::size_t node_store_size() const { return nodes_.size(); }

    enum class NodeKind : std::uint8_t { False, True, Literal, Decision };
    struct NodeView {
        NodeKind kind;
        VarId var = 0;
        bool positive = false;
        VTree::NodeId vtree_node = VTree::kNoNode;
        std::vector<std::pair<SddRef, SddRef>> elements;
    };
    NodeView view(SddRef x) const;

private:
    static constexpr std::uint32_t kFalse = 0;
    static constexpr std::uint32_t kTrue = 1;
    static constexpr std::uint32_t kNoId = ~std::uint32_t{0};

    struct Element {
        std::uint32_t prime, sub;
        bool operator==(const Element&) const = default;
    };
    struct Node {
        NodeKind kind = NodeKind::False;
        bool positive = false;
        VarId var = 0;
        VTree::NodeId vtree_node = VTree::kNoNode;
        std::vector<Element> elements;
        std::uint32_t negation = kNoId;
    };

    std::uint32_t check(SddRef r) const;
    std::uint32_t new_node(Node n);
    std::uint32_t make_decision(VTree::NodeId v, std::vector<Element> elems);
    std::uint32_t apply_rec(bool conj, std::uint32_t x, std::uint32_t y);
    std::uint32_t negate_rec(std::uint32_t x);
    void expand_at(std::uint32_t x, VTree::NodeId v, std::vector<Element>& out);
    std::vector<std::uint8_t> resolve_assignment(const Assignment& w) const;
    bool eval_rec(std::uint32_t x, const std::vector<std::uint8_t>& var_val,
                  std::vector<std::uint8_t>& memo) const;

    VTree vtree_;
    std::uint32_t serial_;
    std::size_t node_limit_;
    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> unique_;
    std::unordered_map<std::uint64_t, std::uint32_t> apply_cache_;
};

}  // namespace vlc
