#include "wcet/expr.hpp"

#include <charconv>

#include "wcet/error.hpp"
#include "wcet/sexpr.hpp"

namespace wcet {

std::string_view to_string(Type t) { return t == Type::Int ? "Int" : "Bool"; }

std::string to_string(const Value& v) {
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::to_string(std::get<Int>(v));
}

Expr::Expr() : node_(std::make_shared<const Node>()) {}

Expr Expr::make(Op op, std::vector<Expr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = 0;
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr Expr::int_const(Int v) {
    auto n = std::make_shared<Node>();
    n->op = Op::IntConst;
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::bool_const(bool v) {
    auto n = std::make_shared<Node>();
    n->op = Op::BoolConst;
    n->value = v ? 1 : 0;
    return Expr(std::move(n));
}

Expr Expr::var(std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->value = 0;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr Expr::add(std::vector<Expr> terms) {
    if (terms.empty()) return int_const(0);
    if (terms.size() == 1) return terms.front();
    return make(Op::Add, std::move(terms));
}

Expr Expr::sub(Expr a, Expr b) { return make(Op::Sub, {std::move(a), std::move(b)}); }
Expr Expr::neg(Expr a) { return make(Op::Neg, {std::move(a)}); }
Expr Expr::mul(Expr a, Expr b) { return make(Op::Mul, {std::move(a), std::move(b)}); }

Expr Expr::cmp(Op op, Expr a, Expr b) {
    switch (op) {
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
        case Op::Eq:
        case Op::Ne:
            return make(op, {std::move(a), std::move(b)});
        default:
            throw Error("ir", "Expr::cmp called with a non-comparison operator");
    }
}

Expr Expr::lnot(Expr a) {
    if (a.op() == Op::BoolConst) return bool_const(!a.bool_value());
    return make(Op::Not, {std::move(a)});
}

Expr Expr::land(std::vector<Expr> terms) {
    std::vector<Expr> kept;
    for (auto& t : terms) {
        if (t.is_true()) continue;
        if (t.is_false()) return bool_const(false);
        kept.push_back(std::move(t));
    }
    if (kept.empty()) return bool_const(true);
    if (kept.size() == 1) return kept.front();
    return make(Op::And, std::move(kept));
}

Expr Expr::lor(std::vector<Expr> terms) {
    std::vector<Expr> kept;
    for (auto& t : terms) {
        if (t.is_false()) continue;
        if (t.is_true()) return bool_const(true);
        kept.push_back(std::move(t));
    }
    if (kept.empty()) return bool_const(false);
    if (kept.size() == 1) return kept.front();
    return make(Op::Or, std::move(kept));
}

Expr Expr::implies(Expr a, Expr b) { return make(Op::Implies, {std::move(a), std::move(b)}); }
Expr Expr::ite(Expr c, Expr a, Expr b) { return make(Op::Ite, {std::move(c), std::move(a), std::move(b)}); }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op() || a.node_->value != b.node_->value || a.name() != b.name()) return false;
    if (a.args().size() != b.args().size()) return false;
    for (std::size_t i = 0; i < a.args().size(); ++i)
        if (a.args()[i] != b.args()[i]) return false;
    return true;
}

namespace {

std::string_view op_symbol(Op op) {
    switch (op) {
        case Op::Add: return "+";
        case Op::Sub: return "-";
        case Op::Neg: return "-";
        case Op::Mul: return "*";
        case Op::Lt: return "<";
        case Op::Le: return "<=";
        case Op::Gt: return ">";
        case Op::Ge: return ">=";
        case Op::Eq: return "=";
        case Op::Ne: return "distinct";
        case Op::Not: return "not";
        case Op::And: return "and";
        case Op::Or: return "or";
        case Op::Implies: return "=>";
        case Op::Ite: return "ite";
        default: return "?";
    }
}

void print(const Expr& e, std::string& out) {
    switch (e.op()) {
        case Op::IntConst:
            if (e.int_value() < 0) {
                // Negating INT64_MIN is not representable; print via unsigned.
                auto mag = static_cast<std::uint64_t>(0) - static_cast<std::uint64_t>(e.int_value());
                out += "(- " + std::to_string(mag) + ")";
            } else {
                out += std::to_string(e.int_value());
            }
            return;
        case Op::BoolConst:
            out += e.bool_value() ? "true" : "false";
            return;
        case Op::Var:
            out += e.name();
            return;
        default:
            break;
    }
    out += '(';
    out += op_symbol(e.op());
    for (const auto& a : e.args()) {
        out += ' ';
        print(a, out);
    }
    out += ')';
}

std::optional<Int> parse_int(std::string_view s) {
    Int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

Expr from_sexpr(const SExpr& s) {
    if (s.is_atom) {
        if (s.atom == "true") return Expr::bool_const(true);
        if (s.atom == "false") return Expr::bool_const(false);
        if (auto v = parse_int(s.atom)) return Expr::int_const(*v);
        if (s.atom.empty() || s.atom.front() == '"')
            throw ParseError("invalid atom '" + s.atom + "'", s.line, s.column);
        return Expr::var(s.atom);
    }
    if (s.items.empty() || !s.items.front().is_atom)
        throw ParseError("expected operator", s.line, s.column);
    const std::string& head = s.items.front().atom;
    std::vector<Expr> args;
    for (std::size_t i = 1; i < s.items.size(); ++i) args.push_back(from_sexpr(s.items[i]));
    auto arity = [&](std::size_t n) {
        if (args.size() != n)
            throw ParseError("operator '" + head + "' expects " + std::to_string(n) + " operands", s.line,
                             s.column);
    };
    if (head == "+") {
        if (args.size() < 2) throw ParseError("'+' expects at least 2 operands", s.line, s.column);
        return Expr::add(std::move(args));
    }
    if (head == "-") {
        if (args.size() == 1) {
            if (args[0].op() == Op::IntConst) return Expr::int_const(-args[0].int_value());
            return Expr::neg(args[0]);
        }
        if (args.size() < 2) throw ParseError("'-' expects operands", s.line, s.column);
        Expr acc = args[0];
        for (std::size_t i = 1; i < args.size(); ++i) acc = Expr::sub(acc, args[i]);
        return acc;
    }
    if (head == "*") {
        arity(2);
        return Expr::mul(args[0], args[1]);
    }
    static const std::map<std::string, Op, std::less<>> cmps = {
        {"<", Op::Lt}, {"<=", Op::Le}, {">", Op::Gt}, {">=", Op::Ge}, {"=", Op::Eq}, {"distinct", Op::Ne}};
    if (auto it = cmps.find(head); it != cmps.end()) {
        arity(2);
        return Expr::cmp(it->second, args[0], args[1]);
    }
    if (head == "not") {
        arity(1);
        return Expr::lnot(args[0]);
    }
    if (head == "and" || head == "or") {
        if (args.size() < 2) throw ParseError("'" + head + "' expects at least 2 operands", s.line, s.column);
        return head == "and" ? Expr::land(std::move(args)) : Expr::lor(std::move(args));
    }
    if (head == "=>") {
        arity(2);
        return Expr::implies(args[0], args[1]);
    }
    if (head == "ite") {
        arity(3);
        return Expr::ite(args[0], args[1], args[2]);
    }
    throw ParseError("unknown operator '" + head + "'", s.line, s.column);
}

}  // namespace

std::string to_sexpr(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

Expr parse_prefix(std::string_view text) { return from_sexpr(parse_sexpr(text)); }

void collect_vars(const Expr& e, std::set<std::string>& out) {
    if (e.is_var()) {
        out.insert(e.name());
        return;
    }
    for (const auto& a : e.args()) collect_vars(a, out);
}

std::set<std::string> vars_of(const Expr& e) {
    std::set<std::string> out;
    collect_vars(e, out);
    return out;
}

namespace {

Expr rebuild(const Expr& e, std::vector<Expr> args) {
    switch (e.op()) {
        case Op::Add: return Expr::add(std::move(args));
        case Op::Sub: return Expr::sub(args[0], args[1]);
        case Op::Neg: return Expr::neg(args[0]);
        case Op::Mul: return Expr::mul(args[0], args[1]);
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
        case Op::Eq:
        case Op::Ne: return Expr::cmp(e.op(), args[0], args[1]);
        case Op::Not: return Expr::lnot(args[0]);
        case Op::And: return Expr::land(std::move(args));
        case Op::Or: return Expr::lor(std::move(args));
        case Op::Implies: return Expr::implies(args[0], args[1]);
        case Op::Ite: return Expr::ite(args[0], args[1], args[2]);
        default: return e;
    }
}

template <typename F>
Expr map_leaves(const Expr& e, const F& leaf) {
    if (e.args().empty()) return leaf(e);
    std::vector<Expr> args;
    args.reserve(e.args().size());
    for (const auto& a : e.args()) args.push_back(map_leaves(a, leaf));
    return rebuild(e, std::move(args));
}

}  // namespace

Expr rename_vars(const Expr& e, const std::function<std::string(const std::string&)>& rename) {
    return map_leaves(e, [&](const Expr& leaf) { return leaf.is_var() ? Expr::var(rename(leaf.name())) : leaf; });
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& map) {
    return map_leaves(e, [&](const Expr& leaf) {
        if (!leaf.is_var()) return leaf;
        auto it = map.find(leaf.name());
        return it == map.end() ? leaf : it->second;
    });
}

namespace {

bool is_constant_tree(const Expr& e) {
    if (e.op() == Op::IntConst) return true;
    if (e.op() == Op::Var || e.op() == Op::BoolConst) return false;
    for (const auto& a : e.args())
        if (!is_constant_tree(a)) return false;
    return e.op() == Op::Add || e.op() == Op::Sub || e.op() == Op::Neg || e.op() == Op::Mul;
}

}  // namespace

bool is_linear(const Expr& e) {
    if (e.op() == Op::Mul && !is_constant_tree(e.args()[0]) && !is_constant_tree(e.args()[1])) return false;
    for (const auto& a : e.args())
        if (!is_linear(a)) return false;
    return true;
}

Type type_of(const Expr& e, const std::function<std::optional<Type>(const std::string&)>& lookup) {
    auto expect = [&](const Expr& a, Type t) {
        Type got = type_of(a, lookup);
        if (got != t)
            throw Error("ir", "type error: expected " + std::string(to_string(t)) + " operand in '" + to_sexpr(e) +
                                  "', got " + std::string(to_string(got)));
    };
    switch (e.op()) {
        case Op::IntConst: return Type::Int;
        case Op::BoolConst: return Type::Bool;
        case Op::Var: {
            auto t = lookup(e.name());
            if (!t) throw Error("ir", "untyped or undefined variable '" + e.name() + "'");
            return *t;
        }
        case Op::Add:
        case Op::Sub:
        case Op::Neg:
        case Op::Mul:
            for (const auto& a : e.args()) expect(a, Type::Int);
            return Type::Int;
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
            for (const auto& a : e.args()) expect(a, Type::Int);
            return Type::Bool;
        case Op::Eq:
        case Op::Ne: {
            Type t = type_of(e.args()[0], lookup);
            expect(e.args()[1], t);
            return Type::Bool;
        }
        case Op::Not:
        case Op::And:
        case Op::Or:
        case Op::Implies:
            for (const auto& a : e.args()) expect(a, Type::Bool);
            return Type::Bool;
        case Op::Ite: {
            expect(e.args()[0], Type::Bool);
            Type t = type_of(e.args()[1], lookup);
            expect(e.args()[2], t);
            return t;
        }
    }
    throw Error("ir", "unknown expression node");
}

namespace {

void check_overflow(bool overflow) {
    if (overflow) throw Error("solve", "integer overflow while evaluating expression");
}

}  // namespace

Value evaluate(const Expr& e, const std::function<std::optional<Value>(const std::string&)>& lookup) {
    auto as_int = [&](const Expr& a) -> Int {
        Value v = evaluate(a, lookup);
        if (const auto* i = std::get_if<Int>(&v)) return *i;
        throw Error("solve", "expected integer value for '" + to_sexpr(a) + "'");
    };
    auto as_bool = [&](const Expr& a) -> bool {
        Value v = evaluate(a, lookup);
        if (const auto* b = std::get_if<bool>(&v)) return *b;
        throw Error("solve", "expected Boolean value for '" + to_sexpr(a) + "'");
    };
    switch (e.op()) {
        case Op::IntConst: return e.int_value();
        case Op::BoolConst: return e.bool_value();
        case Op::Var: {
            auto v = lookup(e.name());
            if (!v) throw Error("solve", "unbound variable '" + e.name() + "'");
            return *v;
        }
        case Op::Add: {
            Int acc = 0;
            for (const auto& a : e.args()) {
                check_overflow(__builtin_add_overflow(acc, as_int(a), &acc));
            }
            return acc;
        }
        case Op::Sub: {
            Int r = 0;
            check_overflow(__builtin_sub_overflow(as_int(e.args()[0]), as_int(e.args()[1]), &r));
            return r;
        }
        case Op::Neg: {
            Int r = 0;
            check_overflow(__builtin_sub_overflow(Int{0}, as_int(e.args()[0]), &r));
            return r;
        }
        case Op::Mul: {
            Int r = 0;
            check_overflow(__builtin_mul_overflow(as_int(e.args()[0]), as_int(e.args()[1]), &r));
            return r;
        }
        case Op::Lt: return as_int(e.args()[0]) < as_int(e.args()[1]);
        case Op::Le: return as_int(e.args()[0]) <= as_int(e.args()[1]);
        case Op::Gt: return as_int(e.args()[0]) > as_int(e.args()[1]);
        case Op::Ge: return as_int(e.args()[0]) >= as_int(e.args()[1]);
        case Op::Eq: return evaluate(e.args()[0], lookup) == evaluate(e.args()[1], lookup);
        case Op::Ne: return evaluate(e.args()[0], lookup) != evaluate(e.args()[1], lookup);
        case Op::Not: return !as_bool(e.args()[0]);
        case Op::And:
            for (const auto& a : e.args())
                if (!as_bool(a)) return false;
            return true;
        case Op::Or:
            for (const auto& a : e.args())
                if (as_bool(a)) return true;
            return false;
        case Op::Implies: return !as_bool(e.args()[0]) || as_bool(e.args()[1]);
        case Op::Ite: return as_bool(e.args()[0]) ? evaluate(e.args()[1], lookup) : evaluate(e.args()[2], lookup);
    }
    throw Error("solve", "unknown expression node");
}

}  // namespace wcet
