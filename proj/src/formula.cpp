#include "vlc/formula.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace vlc {

namespace {

void hash_combine(std::size_t& seed, std::size_t v) {
    seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

}  // namespace

// ---------------------------------------------------------------- VarTable

VarId VarTable::intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    VarId id = static_cast<VarId>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
}

std::optional<VarId> VarTable::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& VarTable::name(VarId id) const { return names_.at(id); }

// -------------------------------------------------------------- Assignment

void Assignment::set(std::string_view name, bool value) {
    auto id = vars_->find(name);
    if (!id) throw UndeclaredVariable(std::string(name));
    values_[*id] = value ? 1 : 0;
}

bool Assignment::value_of(std::string_view name) const {
    auto id = vars_->find(name);
    if (!id) throw UndeclaredVariable(std::string(name));
    return values_[*id] != 0;
}

// ------------------------------------------------------------- SyntaxError

namespace {

std::string syntax_message(std::size_t offset, const std::vector<std::string>& expected,
                           const std::string& detail) {
    std::ostringstream os;
    os << "syntax error at offset " << offset;
    if (!detail.empty()) os << ": " << detail;
    if (!expected.empty()) {
        os << " (expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) os << ", ";
            os << expected[i];
        }
        os << ")";
    }
    return os.str();
}

}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected,
                         const std::string& detail)
    : Error(syntax_message(offset, expected, detail)),
      offset_(offset),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------- FormulaBuilder

std::size_t FormulaBuilder::NodeKeyHash::operator()(const NodeKey& k) const {
    std::size_t seed = static_cast<std::size_t>(k.node.kind);
    hash_combine(seed, k.node.value ? 1u : 0u);
    hash_combine(seed, k.node.var);
    for (auto kid : k.node.kids) hash_combine(seed, kid);
    return seed;
}

std::uint32_t FormulaBuilder::add_node(Formula::Node node) {
    NodeKey key{node};
    auto it = dedup_.find(key);
    if (it != dedup_.end()) return it->second;
    auto idx = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(std::move(node));
    dedup_.emplace(std::move(key), idx);
    return idx;
}

std::uint32_t FormulaBuilder::add_const(bool value) {
    return add_node({Formula::Kind::Const, value, 0, {}});
}

std::uint32_t FormulaBuilder::add_var(std::string_view name) {
    return add_node({Formula::Kind::Var, false, vars_.intern(name), {}});
}

std::uint32_t FormulaBuilder::add_not(std::uint32_t kid) {
    return add_node({Formula::Kind::Not, false, 0, {kid}});
}

std::uint32_t FormulaBuilder::add_nary(Formula::Kind kind, std::vector<std::uint32_t> kids) {
    if (kids.size() == 1) return kids[0];
    return add_node({kind, false, 0, std::move(kids)});
}

std::uint32_t FormulaBuilder::add_binary(Formula::Kind kind, std::uint32_t lhs,
                                         std::uint32_t rhs) {
    return add_node({kind, false, 0, {lhs, rhs}});
}

std::uint32_t FormulaBuilder::import(const Formula& f) {
    std::vector<std::uint32_t> remap(f.nodes().size());
    for (std::uint32_t i = 0; i < f.nodes().size(); ++i) {
        Formula::Node node = f.nodes()[i];
        if (node.kind == Formula::Kind::Var) {
            node.var = vars_.intern(f.vars().name(node.var));
        }
        for (auto& kid : node.kids) kid = remap[kid];
        remap[i] = add_node(std::move(node));
    }
    return remap[f.root()];
}

Formula FormulaBuilder::finish(std::uint32_t root) && {
    Formula f;
    f.nodes_ = std::move(nodes_);
    f.root_ = root;
    f.vars_ = std::move(vars_);
    return f;
}

// ------------------------------------------------------------ constructors

Formula Formula::constant(bool value) {
    FormulaBuilder b;
    auto r = b.add_const(value);
    return std::move(b).finish(r);
}

Formula Formula::var(std::string_view name) {
    FormulaBuilder b;
    auto r = b.add_var(name);
    return std::move(b).finish(r);
}

Formula Formula::negation(Formula f) {
    FormulaBuilder b;
    auto r = b.add_not(b.import(f));
    return std::move(b).finish(r);
}

Formula Formula::and_of(std::vector<Formula> fs) {
    FormulaBuilder b;
    std::vector<std::uint32_t> kids;
    kids.reserve(fs.size());
    for (const auto& f : fs) kids.push_back(b.import(f));
    auto r = b.add_nary(Kind::And, std::move(kids));
    return std::move(b).finish(r);
}

Formula Formula::or_of(std::vector<Formula> fs) {
    FormulaBuilder b;
    std::vector<std::uint32_t> kids;
    kids.reserve(fs.size());
    for (const auto& f : fs) kids.push_back(b.import(f));
    auto r = b.add_nary(Kind::Or, std::move(kids));
    return std::move(b).finish(r);
}

namespace {

Formula binary(Formula::Kind kind, Formula lhs, Formula rhs) {
    FormulaBuilder b;
    auto l = b.import(lhs);
    auto r = b.import(rhs);
    auto root = b.add_binary(kind, l, r);
    return std::move(b).finish(root);
}

}  // namespace

Formula Formula::xor_of(Formula lhs, Formula rhs) {
    return binary(Kind::Xor, std::move(lhs), std::move(rhs));
}

Formula Formula::implies(Formula lhs, Formula rhs) {
    return binary(Kind::Implies, std::move(lhs), std::move(rhs));
}

Formula Formula::iff(Formula lhs, Formula rhs) {
    return binary(Kind::Iff, std::move(lhs), std::move(rhs));
}

Formula operator&(Formula lhs, Formula rhs) {
    return Formula::and_of({std::move(lhs), std::move(rhs)});
}

Formula operator|(Formula lhs, Formula rhs) {
    return Formula::or_of({std::move(lhs), std::move(rhs)});
}

// ------------------------------------------------------------------ parser

namespace {

enum class Tok : std::uint8_t {
    Ident, True, False, Not, And, Xor, Or, Implies, Iff, LParen, RParen, End
};

struct Token {
    Tok kind;
    std::size_t offset;
    std::string_view text;  // Ident only
};

constexpr std::size_t kMaxNesting = 4096;

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) { advance(); }

    Formula run() {
        auto root = parse_iff();
        expect_end();
        return std::move(builder_).finish(root);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    Token cur_{};
    std::size_t depth_ = 0;
    FormulaBuilder builder_;

    [[noreturn]] void fail(std::size_t offset, std::vector<std::string> expected,
                           const std::string& detail = "") {
        throw SyntaxError(offset, std::move(expected), detail);
    }

    static bool ident_start(char c) {
        return c == '_' || std::isalpha(static_cast<unsigned char>(c));
    }
    static bool ident_char(char c) {
        return c == '_' || std::isalnum(static_cast<unsigned char>(c));
    }

    void advance() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        std::size_t start = pos_;
        if (pos_ >= text_.size()) {
            cur_ = {Tok::End, start, {}};
            return;
        }
        char c = text_[pos_];
        if (ident_start(c)) {
            while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
            std::string_view word = text_.substr(start, pos_ - start);
            if (word == "true") {
                cur_ = {Tok::True, start, word};
            } else if (word == "false") {
                cur_ = {Tok::False, start, word};
            } else {
                cur_ = {Tok::Ident, start, word};
            }
            return;
        }
        switch (c) {
            case '!': ++pos_; cur_ = {Tok::Not, start, {}}; return;
            case '&': ++pos_; cur_ = {Tok::And, start, {}}; return;
            case '^': ++pos_; cur_ = {Tok::Xor, start, {}}; return;
            case '|': ++pos_; cur_ = {Tok::Or, start, {}}; return;
            case '(': ++pos_; cur_ = {Tok::LParen, start, {}}; return;
            case ')': ++pos_; cur_ = {Tok::RParen, start, {}}; return;
            case '-':
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                    pos_ += 2;
                    cur_ = {Tok::Implies, start, {}};
                    return;
                }
                fail(start, {"'->'"});
            case '<':
                if (text_.compare(pos_, 3, "<->") == 0) {
                    pos_ += 3;
                    cur_ = {Tok::Iff, start, {}};
                    return;
                }
                fail(start, {"'<->'"});
            default:
                fail(start, {"identifier", "'true'", "'false'", "'!'", "'('"},
                     "unexpected character");
        }
    }

    bool accept(Tok kind) {
        if (cur_.kind != kind) return false;
        advance();
        return true;
    }

    void expect_end() {
        if (cur_.kind != Tok::End) {
            fail(cur_.offset,
                 {"'&'", "'^'", "'|'", "'->'", "'<->'", "end of input"});
        }
    }

    std::uint32_t parse_iff() {
        auto lhs = parse_implies();
        if (accept(Tok::Iff)) {
            auto rhs = parse_iff();  // right-associative
            return builder_.add_binary(Formula::Kind::Iff, lhs, rhs);
        }
        return lhs;
    }

    std::uint32_t parse_implies() {
        auto lhs = parse_or();
        if (accept(Tok::Implies)) {
            auto rhs = parse_implies();  // right-associative
            return builder_.add_binary(Formula::Kind::Implies, lhs, rhs);
        }
        return lhs;
    }

    std::uint32_t parse_or() {
        std::vector<std::uint32_t> kids{parse_xor()};
        while (accept(Tok::Or)) kids.push_back(parse_xor());
        return builder_.add_nary(Formula::Kind::Or, std::move(kids));
    }

    std::uint32_t parse_xor() {
        auto lhs = parse_and();
        while (accept(Tok::Xor)) {
            auto rhs = parse_and();
            lhs = builder_.add_binary(Formula::Kind::Xor, lhs, rhs);
        }
        return lhs;
    }

    std::uint32_t parse_and() {
        std::vector<std::uint32_t> kids{parse_unary()};
        while (accept(Tok::And)) kids.push_back(parse_unary());
        return builder_.add_nary(Formula::Kind::And, std::move(kids));
    }

    std::uint32_t parse_unary() {
        if (depth_ >= kMaxNesting) {
            fail(cur_.offset, {}, "nesting depth limit exceeded");
        }
        ++depth_;
        std::uint32_t result;
        if (accept(Tok::Not)) {
            result = builder_.add_not(parse_unary());
        } else {
            result = parse_atom();
        }
        --depth_;
        return result;
    }

    std::uint32_t parse_atom() {
        switch (cur_.kind) {
            case Tok::True: advance(); return builder_.add_const(true);
            case Tok::False: advance(); return builder_.add_const(false);
            case Tok::Ident: {
                auto idx = builder_.add_var(cur_.text);
                advance();
                return idx;
            }
            case Tok::LParen: {
                advance();
                auto inner = parse_iff();
                if (!accept(Tok::RParen)) {
                    fail(cur_.offset, {"')'"});
                }
                return inner;
            }
            default:
                fail(cur_.offset, {"identifier", "'true'", "'false'", "'!'", "'('"});
        }
    }
};

}  // namespace

Formula parse_formula(std::string_view text) {
    if (text.empty()) throw SyntaxError(0, {"formula"}, "empty input");
    return Parser(text).run();
}

// ----------------------------------------------------------------- printer

namespace {

// Higher binds tighter; atoms never need parentheses.
int precedence(Formula::Kind kind) {
    switch (kind) {
        case Formula::Kind::Const:
        case Formula::Kind::Var: return 7;
        case Formula::Kind::Not: return 6;
        case Formula::Kind::And: return 5;
        case Formula::Kind::Xor: return 4;
        case Formula::Kind::Or: return 3;
        case Formula::Kind::Implies: return 2;
        case Formula::Kind::Iff: return 1;
    }
    return 0;
}

void print_node(const Formula& f, std::uint32_t idx, std::ostringstream& os,
                int parent_prec, bool assoc_side_ok) {
    const auto& n = f.node(idx);
    int prec = precedence(n.kind);
    bool parens = prec < parent_prec || (prec == parent_prec && !assoc_side_ok);
    if (parens) os << "(";
    switch (n.kind) {
        case Formula::Kind::Const:
            os << (n.value ? "true" : "false");
            break;
        case Formula::Kind::Var:
            os << f.vars().name(n.var);
            break;
        case Formula::Kind::Not:
            os << "!";
            print_node(f, n.kids[0], os, prec, true);
            break;
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            const char* sep = n.kind == Formula::Kind::And ? " & " : " | ";
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                if (i) os << sep;
                // equal precedence always parenthesized, preserving arity
                print_node(f, n.kids[i], os, prec, false);
            }
            break;
        }
        case Formula::Kind::Xor:
            print_node(f, n.kids[0], os, prec, true);  // left-associative
            os << " ^ ";
            print_node(f, n.kids[1], os, prec, false);
            break;
        case Formula::Kind::Implies:
        case Formula::Kind::Iff:
            print_node(f, n.kids[0], os, prec, false);
            os << (n.kind == Formula::Kind::Implies ? " -> " : " <-> ");
            print_node(f, n.kids[1], os, prec, true);  // right-associative
            break;
    }
    if (parens) os << ")";
}

}  // namespace

std::string Formula::to_string() const {
    std::ostringstream os;
    print_node(*this, root_, os, 0, true);
    return os.str();
}

// ----------------------------------------------------------------- desugar

Formula desugar(const Formula& f) {
    FormulaBuilder b;
    std::vector<std::uint32_t> remap(f.nodes().size());
    for (std::uint32_t i = 0; i < f.nodes().size(); ++i) {
        const auto& n = f.nodes()[i];
        switch (n.kind) {
            case Formula::Kind::Const:
                remap[i] = b.add_const(n.value);
                break;
            case Formula::Kind::Var:
                remap[i] = b.add_var(f.vars().name(n.var));
                break;
            case Formula::Kind::Not:
                remap[i] = b.add_not(remap[n.kids[0]]);
                break;
            case Formula::Kind::And:
            case Formula::Kind::Or: {
                std::vector<std::uint32_t> kids;
                kids.reserve(n.kids.size());
                for (auto k : n.kids) kids.push_back(remap[k]);
                remap[i] = b.add_nary(n.kind, std::move(kids));
                break;
            }
            case Formula::Kind::Xor: {
                auto l = remap[n.kids[0]], r = remap[n.kids[1]];
                remap[i] = b.add_nary(
                    Formula::Kind::Or,
                    {b.add_nary(Formula::Kind::And, {l, b.add_not(r)}),
                     b.add_nary(Formula::Kind::And, {b.add_not(l), r})});
                break;
            }
            case Formula::Kind::Implies: {
                auto l = remap[n.kids[0]], r = remap[n.kids[1]];
                remap[i] = b.add_nary(Formula::Kind::Or, {b.add_not(l), r});
                break;
            }
            case Formula::Kind::Iff: {
                auto l = remap[n.kids[0]], r = remap[n.kids[1]];
                remap[i] = b.add_nary(
                    Formula::Kind::Or,
                    {b.add_nary(Formula::Kind::And, {l, r}),
                     b.add_nary(Formula::Kind::And, {b.add_not(l), b.add_not(r)})});
                break;
            }
        }
    }
    return std::move(b).finish(remap[f.root()]);
}

// --------------------------------------------------------------- free_vars

std::vector<VarId> free_vars(const Formula& f) {
    std::vector<VarId> out;
    std::vector<bool> seen_var(f.vars().size(), false);
    std::vector<bool> visited(f.nodes().size(), false);
    // Explicit stack, left-to-right first-appearance order.
    std::vector<std::uint32_t> stack{f.root()};
    while (!stack.empty()) {
        auto idx = stack.back();
        stack.pop_back();
        if (visited[idx]) continue;
        visited[idx] = true;
        const auto& n = f.node(idx);
        if (n.kind == Formula::Kind::Var) {
            if (!seen_var[n.var]) {
                seen_var[n.var] = true;
                out.push_back(n.var);
            }
            continue;
        }
        for (auto it = n.kids.rbegin(); it != n.kids.rend(); ++it) {
            if (!visited[*it]) stack.push_back(*it);
        }
    }
    return out;
}

// ------------------------------------------------------------ eval_formula

bool eval_formula(const Formula& f, const Assignment& w) {
    // Resolve this formula's variables in the assignment's table by name.
    std::vector<std::uint8_t> var_value(f.vars().size());
    for (VarId v = 0; v < f.vars().size(); ++v) {
        var_value[v] = w.value_of(f.vars().name(v)) ? 1 : 0;
    }
    std::vector<std::uint8_t> val(f.nodes().size());
    for (std::uint32_t i = 0; i < f.nodes().size(); ++i) {
        const auto& n = f.nodes()[i];
        switch (n.kind) {
            case Formula::Kind::Const: val[i] = n.value; break;
            case Formula::Kind::Var: val[i] = var_value[n.var]; break;
            case Formula::Kind::Not: val[i] = !val[n.kids[0]]; break;
            case Formula::Kind::And: {
                std::uint8_t acc = 1;
                for (auto k : n.kids) acc &= val[k];
                val[i] = acc;
                break;
            }
            case Formula::Kind::Or: {
                std::uint8_t acc = 0;
                for (auto k : n.kids) acc |= val[k];
                val[i] = acc;
                break;
            }
            case Formula::Kind::Xor: val[i] = val[n.kids[0]] != val[n.kids[1]]; break;
            case Formula::Kind::Implies: val[i] = !val[n.kids[0]] || val[n.kids[1]]; break;
            case Formula::Kind::Iff: val[i] = val[n.kids[0]] == val[n.kids[1]]; break;
        }
    }
    return val[f.root()] != 0;
}

// ---------------------------------------------------------- same_structure

namespace {

bool same_structure_rec(const Formula& a, std::uint32_t ia, const Formula& b,
                        std::uint32_t ib,
                        std::unordered_map<std::uint64_t, bool>& memo) {
    std::uint64_t key = (static_cast<std::uint64_t>(ia) << 32) | ib;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const auto& na = a.node(ia);
    const auto& nb = b.node(ib);
    bool eq = na.kind == nb.kind && na.kids.size() == nb.kids.size();
    if (eq) {
        switch (na.kind) {
            case Formula::Kind::Const: eq = na.value == nb.value; break;
            case Formula::Kind::Var: eq = a.vars().name(na.var) == b.vars().name(nb.var); break;
            default: break;
        }
    }
    if (eq) {
        for (std::size_t i = 0; i < na.kids.size() && eq; ++i) {
            eq = same_structure_rec(a, na.kids[i], b, nb.kids[i], memo);
        }
    }
    memo.emplace(key, eq);
    return eq;
}

}  // namespace

bool Formula::same_structure(const Formula& other) const {
    std::unordered_map<std::uint64_t, bool> memo;
    return same_structure_rec(*this, root_, other, other.root_, memo);
}

}  // namespace vlc
