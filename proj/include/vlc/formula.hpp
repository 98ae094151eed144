#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vlc/errors.hpp"

namespace vlc {

using VarId = std::uint32_t;

// Interned variable names. Ids are dense and assigned in first-appearance
// order, so two tables built from the same name sequence are identical.
class VarTable {
public:
    VarId intern(std::string_view name);
    std::optional<VarId> find(std::string_view name) const;
    const std::string& name(VarId id) const;
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    bool operator==(const VarTable& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, VarId> index_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& detail);
    std::size_t offset() const { return offset_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class UndeclaredVariable : public Error {
public:
    explicit UndeclaredVariable(const std::string& name)
        : Error("undeclared variable: " + name), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

// A total truth assignment over the variables of a VarTable.
class Assignment {
public:
    explicit Assignment(std::shared_ptr<const VarTable> vars)
        : vars_(std::move(vars)), values_(vars_->size(), 0) {}

    void set(VarId id, bool value) { values_.at(id) = value ? 1 : 0; }
    void set(std::string_view name, bool value);

    bool operator[](VarId id) const { return values_[id] != 0; }
    bool value_of(std::string_view name) const;  // throws UndeclaredVariable

    const VarTable& vars() const { return *vars_; }
    const std::shared_ptr<const VarTable>& vars_ptr() const { return vars_; }

private:
    std::shared_ptr<const VarTable> vars_;
    std::vector<std::uint8_t> values_;
};

// Propositional formula. Nodes live in an arena in child-before-parent order
// with structurally identical subterms shared, so iterated combinations such
// as a carry chain stay linear in size. Connective semantics are the usual
// ones; And/Or are n-ary with at least two children.
class Formula {
public:
    enum class Kind : std::uint8_t { Const, Var, Not, And, Or, Xor, Implies, Iff };

    struct Node {
        Kind kind;
        bool value = false;  // Const only
        VarId var = 0;       // Var only
        std::vector<std::uint32_t> kids;

        bool operator==(const Node& other) const = default;
    };

    static Formula constant(bool value);
    static Formula var(std::string_view name);
    static Formula negation(Formula f);
    static Formula and_of(std::vector<Formula> fs);
    static Formula or_of(std::vector<Formula> fs);
    static Formula xor_of(Formula lhs, Formula rhs);
    static Formula implies(Formula lhs, Formula rhs);
    static Formula iff(Formula lhs, Formula rhs);

    friend Formula operator!(Formula f) { return negation(std::move(f)); }
    friend Formula operator&(Formula lhs, Formula rhs);
    friend Formula operator|(Formula lhs, Formula rhs);
    friend Formula operator^(Formula lhs, Formula rhs) {
        return xor_of(std::move(lhs), std::move(rhs));
    }

    const VarTable& vars() const { return vars_; }
    std::span<const Node> nodes() const { return nodes_; }
    std::uint32_t root() const { return root_; }
    const Node& node(std::uint32_t idx) const { return nodes_[idx]; }

    std::string to_string() const;

    // Tree equality up to variable names (arena layout is irrelevant).
    bool same_structure(const Formula& other) const;

private:
    friend class FormulaBuilder;
    Formula() = default;

    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
    VarTable vars_;
};

// Incrementally assembles one formula arena with node sharing. Used by the
// parser, the combinators, and desugar.
class FormulaBuilder {
public:
    FormulaBuilder() = default;

    std::uint32_t add_const(bool value);
    std::uint32_t add_var(std::string_view name);
    std::uint32_t add_not(std::uint32_t kid);
    std::uint32_t add_nary(Formula::Kind kind, std::vector<std::uint32_t> kids);
    std::uint32_t add_binary(Formula::Kind kind, std::uint32_t lhs, std::uint32_t rhs);

    // Copies another formula's nodes into this arena; returns its root here.
    std::uint32_t import(const Formula& f);

    Formula finish(std::uint32_t root) &&;

private:
    std::uint32_t add_node(Formula::Node node);

    struct NodeKey {
        Formula::Node node;
        bool operator==(const NodeKey&) const = default;
    };
    struct NodeKeyHash {
        std::size_t operator()(const NodeKey& k) const;
    };

    std::vector<Formula::Node> nodes_;
    VarTable vars_;
    std::unordered_map<NodeKey, std::uint32_t, NodeKeyHash> dedup_;
};

// Parses the textual grammar: identifiers [A-Za-z_][A-Za-z0-9_]*, literals
// true/false, operators ! & ^ | -> <-> with that precedence (tightest first),
// -> and <-> right-associative, parentheses for grouping. Runs of & or |
// collect into one n-ary node. Throws SyntaxError with the byte offset and
// the set of tokens that would have been accepted.
Formula parse_formula(std::string_view text);

// Rewrites Xor/Implies/Iff into {Const, Var, Not, And, Or}.
Formula desugar(const Formula& f);

// Variable ids in first-appearance (left-to-right) order, deduplicated.
std::vector<VarId> free_vars(const Formula& f);

// Standard Boolean semantics. The assignment may be over a different table;
// variables are matched by name. Throws UndeclaredVariable.
bool eval_formula(const Formula& f, const Assignment& w);

}  // namespace vlc
