#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wcet {

using Int = std::int64_t;

enum class Type { Int, Bool };

std::string_view to_string(Type t);

enum class Op {
    IntConst,
    BoolConst,
    Var,
    Add,  // n-ary
    Sub,  // binary
    Neg,
    Mul,  // binary; linear only when one side is constant
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Not,
    And,  // n-ary
    Or,   // n-ary
    Implies,
    Ite,
};

/// Immutable expression tree over linear integer arithmetic and Booleans.
/// Nodes are shared; copying an Expr is cheap.
class Expr {
public:
    Expr();  // the Boolean constant `true`

    static Expr int_const(Int v);
    static Expr bool_const(bool v);
    static Expr var(std::string name);
    static Expr add(std::vector<Expr> terms);
    static Expr add(Expr a, Expr b) { return add(std::vector<Expr>{std::move(a), std::move(b)}); }
    static Expr sub(Expr a, Expr b);
    static Expr neg(Expr a);
    static Expr mul(Expr a, Expr b);
    static Expr cmp(Op op, Expr a, Expr b);
    static Expr lnot(Expr a);
    static Expr land(std::vector<Expr> terms);
    static Expr land(Expr a, Expr b) { return land(std::vector<Expr>{std::move(a), std::move(b)}); }
    static Expr lor(std::vector<Expr> terms);
    static Expr implies(Expr a, Expr b);
    static Expr ite(Expr c, Expr a, Expr b);
    static Expr eq(Expr a, Expr b) { return cmp(Op::Eq, std::move(a), std::move(b)); }
    static Expr le(Expr a, Expr b) { return cmp(Op::Le, std::move(a), std::move(b)); }
    static Expr ge(Expr a, Expr b) { return cmp(Op::Ge, std::move(a), std::move(b)); }

    Op op() const { return node_->op; }
    Int int_value() const { return node_->value; }
    bool bool_value() const { return node_->value != 0; }
    const std::string& name() const { return node_->name; }
    const std::vector<Expr>& args() const { return node_->args; }

    bool is_const() const { return op() == Op::IntConst || op() == Op::BoolConst; }
    bool is_var() const { return op() == Op::Var; }
    bool is_true() const { return op() == Op::BoolConst && bool_value(); }
    bool is_false() const { return op() == Op::BoolConst && !bool_value(); }

    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

private:
    struct Node {
        Op op = Op::BoolConst;
        Int value = 1;
        std::string name;
        std::vector<Expr> args;
    };
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Expr make(Op op, std::vector<Expr> args);

    std::shared_ptr<const Node> node_;
};

using Value = std::variant<Int, bool>;

std::string to_string(const Value& v);

/// Prints in SMT-LIB-compatible prefix form, e.g. `(+ call 10)`, `(- 5)`.
std::string to_sexpr(const Expr& e);

/// Parses the prefix form produced by to_sexpr. Also accepts `-5` literals.
Expr parse_prefix(std::string_view text);

void collect_vars(const Expr& e, std::set<std::string>& out);
std::set<std::string> vars_of(const Expr& e);

/// Rewrites variable names; `rename` returns the new name.
Expr rename_vars(const Expr& e, const std::function<std::string(const std::string&)>& rename);

/// Replaces variables that have an entry in `map`; others are left alone.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& map);

/// True if no product has two non-constant factors.
bool is_linear(const Expr& e);

/// Type of `e` given variable types. Throws wcet::Error("ir") when ill-typed
/// or when a variable has no type.
Type type_of(const Expr& e, const std::function<std::optional<Type>(const std::string&)>& lookup);

/// Evaluates `e`. `lookup` returns nullopt for unbound variables, which
/// raises wcet::Error. Integer overflow beyond 64 bits also raises.
Value evaluate(const Expr& e, const std::function<std::optional<Value>(const std::string&)>& lookup);

}  // namespace wcet
