#include "wcet/minilang.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <set>

#include "wcet/error.hpp"

namespace wcet {
namespace {

// ---------------------------------------------------------------- lexing

enum class Tok { Ident, Int, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Int value = 0;
    int line = 1;
    int col = 1;
};

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto adv = [&](std::size_t k) {
        for (std::size_t j = 0; j < k; ++j, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||", ".."};
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(1);
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') adv(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(src.substr(i, j - i));
            adv(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Tok::Int;
            t.text = std::string(src.substr(i, j - i));
            auto [p, ec] = std::from_chars(src.data() + i, src.data() + j, t.value);
            if (ec != std::errc()) throw ParseError("integer literal out of range", line, col);
            adv(j - i);
        } else {
            t.kind = Tok::Punct;
            std::size_t len = 1;
            for (const char* op : two)
                if (src.substr(i, 2) == op) len = 2;
            t.text = std::string(src.substr(i, len));
            if (len == 1 && std::string_view("+-*/%<>=!(){};,[]").find(c) == std::string_view::npos)
                throw ParseError(std::string("unexpected character '") + c + "'", line, col);
            adv(len);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------- syntax

struct Ex {
    enum Kind { Num, Bool, Var, Nondet, Unary, Binary } kind = Num;
    std::string op;
    Int value = 0;
    std::string name;
    bool ranged = false;
    Int lo = 0, hi = 0;
    std::vector<Ex> kids;
    int line = 0, col = 0;
};

struct St {
    enum Kind { Assign, Decl, If, For, While, Assume, Cost, Return } kind = Assign;
    std::string var;
    Type decl_type = Type::Int;
    bool has_init = false;
    Ex e;
    std::vector<St> body, orelse;
    Int a = 0, b = 0;
    bool has_bound = false;
    int line = 0, col = 0;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::vector<St> program() {
        std::vector<St> out;
        while (peek().kind != Tok::End) out.push_back(stmt());
        return out;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    bool is(std::string_view s) const { return peek().kind != Tok::End && peek().kind != Tok::Int && peek().text == s; }
    [[noreturn]] void error(const std::string& msg) const {
        const Token& t = peek();
        if (t.kind == Tok::End) throw ParseError(msg + " at end of input", t.line, t.col);
        throw ParseError(msg + ", found '" + t.text + "'", t.line, t.col);
    }
    Token take() { return toks_[pos_++]; }
    void expect(std::string_view s) {
        if (!is(s)) error("expected '" + std::string(s) + "'");
        ++pos_;
    }
    bool accept(std::string_view s) {
        if (!is(s)) return false;
        ++pos_;
        return true;
    }
    std::string ident() {
        if (peek().kind != Tok::Ident || keyword(peek().text)) error("expected identifier");
        return take().text;
    }
    static bool keyword(const std::string& s) {
        static const std::set<std::string> kw = {"if",   "else", "for",  "in",     "while", "bound",  "assume",
                                                  "cost", "return", "int", "bool", "nondet", "true", "false"};
        return kw.count(s) > 0;
    }
    Int signed_int() {
        bool neg = accept("-");
        if (peek().kind != Tok::Int) error("expected integer literal");
        Int v = take().value;
        return neg ? -v : v;
    }

    std::vector<St> block() {
        expect("{");
        std::vector<St> out;
        while (!is("}")) {
            if (peek().kind == Tok::End) error("expected '}'");
            out.push_back(stmt());
        }
        expect("}");
        return out;
    }

    St stmt() {
        St s;
        s.line = peek().line;
        s.col = peek().col;
        if (is("int") || is("bool")) {
            s.kind = St::Decl;
            s.decl_type = take().text == "int" ? Type::Int : Type::Bool;
            s.var = ident();
            if (accept("=")) {
                s.has_init = true;
                s.e = expr();
            }
            expect(";");
        } else if (accept("if")) {
            s.kind = St::If;
            expect("(");
            s.e = expr();
            expect(")");
            s.body = block();
            if (accept("else")) {
                if (is("if"))
                    s.orelse.push_back(stmt());
                else
                    s.orelse = block();
            }
        } else if (accept("for")) {
            s.kind = St::For;
            s.var = ident();
            expect("in");
            s.a = signed_int();
            expect("..");
            s.b = signed_int();
            s.body = block();
        } else if (accept("while")) {
            s.kind = St::While;
            expect("(");
            s.e = expr();
            expect(")");
            if (accept("bound")) {
                if (peek().kind != Tok::Int) error("expected loop bound");
                s.has_bound = true;
                s.b = take().value;
            }
            s.body = block();
        } else if (accept("assume")) {
            s.kind = St::Assume;
            expect("(");
            s.e = expr();
            expect(")");
            expect(";");
        } else if (accept("cost")) {
            s.kind = St::Cost;
            if (peek().kind != Tok::Int) error("expected cycle count");
            s.a = take().value;
            expect(";");
        } else if (accept("return")) {
            s.kind = St::Return;
            expect(";");
        } else {
            s.kind = St::Assign;
            s.var = ident();
            expect("=");
            s.e = expr();
            expect(";");
        }
        return s;
    }

    Ex node(Ex::Kind k, const Token& at) {
        Ex e;
        e.kind = k;
        e.line = at.line;
        e.col = at.col;
        return e;
    }

    Ex expr() { return lor(); }

    Ex binary_chain(Ex (Parser::*next)(), std::initializer_list<std::string_view> ops) {
        Ex left = (this->*next)();
        for (;;) {
            std::string_view hit;
            for (auto op : ops)
                if (is(op)) hit = op;
            if (hit.empty()) return left;
            Token t = take();
            Ex e = node(Ex::Binary, t);
            e.op = t.text;
            e.kids.push_back(std::move(left));
            e.kids.push_back((this->*next)());
            left = std::move(e);
        }
    }

    Ex lor() { return binary_chain(&Parser::land, {"||"}); }
    Ex land() { return binary_chain(&Parser::compare, {"&&"}); }
    Ex compare() {
        Ex left = additive();
        for (std::string_view op : {"<", "<=", ">", ">=", "==", "!="}) {
            if (!is(op)) continue;
            Token t = take();
            Ex e = node(Ex::Binary, t);
            e.op = t.text;
            e.kids.push_back(std::move(left));
            e.kids.push_back(additive());
            for (std::string_view op2 : {"<", "<=", ">", ">=", "==", "!="})
                if (is(op2)) error("comparisons do not chain");
            return e;
        }
        return left;
    }
    Ex additive() { return binary_chain(&Parser::multiplicative, {"+", "-"}); }
    Ex multiplicative() { return binary_chain(&Parser::unary, {"*", "/", "%"}); }
    Ex unary() {
        if (is("-") || is("!")) {
            Token t = take();
            Ex e = node(Ex::Unary, t);
            e.op = t.text;
            e.kids.push_back(unary());
            return e;
        }
        return primary();
    }
    Ex primary() {
        const Token& t = peek();
        if (t.kind == Tok::Int) {
            Ex e = node(Ex::Num, t);
            e.value = take().value;
            return e;
        }
        if (accept("(")) {
            Ex e = expr();
            expect(")");
            return e;
        }
        if (is("true") || is("false")) {
            Ex e = node(Ex::Bool, t);
            e.value = take().text == "true";
            return e;
        }
        if (is("nondet")) {
            Ex e = node(Ex::Nondet, t);
            take();
            expect("(");
            if (!is(")")) {
                e.ranged = true;
                e.lo = signed_int();
                expect(",");
                e.hi = signed_int();
                if (e.lo > e.hi) throw ParseError("nondet range is empty", e.line, e.col);
            }
            expect(")");
            return e;
        }
        if (t.kind == Tok::Ident && !keyword(t.text)) {
            Ex e = node(Ex::Var, t);
            e.name = take().text;
            return e;
        }
        error("expected expression");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- lowering

constexpr BlockId kNone = static_cast<BlockId>(-1);

struct Typed {
    Expr e;
    Type t;
};

class Lowerer {
public:
    explicit Lowerer(const MinilangOptions& o) : opts_(o) {}

    ParsedInput run(const std::vector<St>& prog) {
        BlockId entry = new_block("entry");
        emit(entry);
        lower_seq(prog, false);
        if (cur_ != kNone) return_sites_.push_back(cur_);
        BlockId exit;
        if (return_sites_.size() == 1) {
            exit = return_sites_.front();
        } else {
            exit = new_block("return");
            for (BlockId s : return_sites_) blocks_[s].term = Goto{exit};
            emit(exit);
        }
        blocks_[exit].term = Return{};
        return finish(entry, exit);
    }

private:
    // Names share one table; a collision appends a function-wide counter.
    std::string fresh(const std::string& base) {
        if (used_.insert(base).second) return base;
        for (;;) {
            std::string n = base + std::to_string(++unique_);
            if (used_.insert(n).second) return n;
        }
    }

    BlockId new_block(std::string base) {
        blocks_.push_back(Block{});
        blocks_.back().name = std::move(base);
        order_.push_back(kNone);
        return static_cast<BlockId>(blocks_.size() - 1);
    }

    void emit(BlockId b) {
        blocks_[b].name = fresh(blocks_[b].name);
        order_[b] = emitted_++;
        cur_ = b;
    }

    [[noreturn]] static void fail(const std::string& msg, int line, int col) { throw ParseError(msg, line, col); }

    std::optional<Type> lookup(const std::string& ssa) const {
        auto it = types_.find(ssa);
        if (it == types_.end()) return std::nullopt;
        return it->second;
    }

    Type type_of_value(const Expr& e) const {
        return type_of(e, [&](const std::string& v) { return lookup(v); });
    }

    Expr define(const std::string& base, Expr value, Type t) {
        std::string name = fresh(base);
        blocks_[cur_].assigns.push_back(Assign{name, std::move(value)});
        types_[name] = t;
        return Expr::var(name);
    }

    Expr havoc(const std::string& base, Type t, std::optional<Int> lo, std::optional<Int> hi) {
        std::string name = fresh(base);
        HavocVar h;
        h.name = name;
        h.type = t;
        h.lo = lo;
        h.hi = hi;
        h.block = cur_;
        inputs_.push_back(h);
        types_[name] = t;
        return Expr::var(name);
    }

    static Int fold(const std::string& op, Int a, Int b, const Ex& at) {
        Int r = 0;
        bool ovf = false;
        if (op == "+") ovf = __builtin_add_overflow(a, b, &r);
        else if (op == "-") ovf = __builtin_sub_overflow(a, b, &r);
        else if (op == "*") ovf = __builtin_mul_overflow(a, b, &r);
        else {
            if (b == 0) fail("division by zero in constant expression", at.line, at.col);
            if (a == std::numeric_limits<Int>::min() && b == -1) ovf = true;
            else r = op == "/" ? a / b : a % b;
        }
        if (ovf) fail("integer overflow in constant expression", at.line, at.col);
        return r;
    }

    void require(const Typed& v, Type t, const Ex& at) {
        if (v.t != t)
            fail(std::string("type error: expected ") + std::string(to_string(t)) + ", got " +
                     std::string(to_string(v.t)),
                 at.line, at.col);
    }

    // `branch` marks a comparison whose value only feeds a branch or assume:
    // it is inlined into the guard, though its name is still reserved.
    Typed lower(const Ex& e, Type want, bool branch = false) {
        switch (e.kind) {
            case Ex::Num: return {Expr::int_const(e.value), Type::Int};
            case Ex::Bool: return {Expr::bool_const(e.value != 0), Type::Bool};
            case Ex::Var: {
                auto it = env_.find(e.name);
                if (it == env_.end()) fail("undefined variable '" + e.name + "'", e.line, e.col);
                return {it->second, var_type_.at(e.name)};
            }
            case Ex::Nondet: {
                if (e.ranged) {
                    if (want == Type::Bool) fail("type error: ranged nondet is an integer", e.line, e.col);
                    return {havoc("call", Type::Int, e.lo, e.hi), Type::Int};
                }
                return {havoc("call", want, std::nullopt, std::nullopt), want};
            }
            case Ex::Unary: {
                if (e.op == "-") {
                    Typed a = lower(e.kids[0], Type::Int);
                    require(a, Type::Int, e.kids[0]);
                    if (a.e.op() == Op::IntConst) return {Expr::int_const(fold("-", 0, a.e.int_value(), e)), Type::Int};
                    return {define("sub", Expr::neg(a.e), Type::Int), Type::Int};
                }
                Typed a = lower(e.kids[0], Type::Bool);
                require(a, Type::Bool, e.kids[0]);
                if (a.e.op() == Op::BoolConst) return {Expr::bool_const(!a.e.bool_value()), Type::Bool};
                return {define("lnot", Expr::lnot(a.e), Type::Bool), Type::Bool};
            }
            case Ex::Binary: return lower_binary(e, branch);
        }
        fail("unknown expression", e.line, e.col);
    }

    Typed lower_binary(const Ex& e, bool branch) {
        const std::string& op = e.op;
        if (op == "&&" || op == "||") {
            Typed a = lower(e.kids[0], Type::Bool);
            Typed b = lower(e.kids[1], Type::Bool);
            require(a, Type::Bool, e.kids[0]);
            require(b, Type::Bool, e.kids[1]);
            Expr v = op == "&&" ? Expr::land(a.e, b.e) : Expr::lor({a.e, b.e});
            if (v.is_const() || v.is_var()) return {v, Type::Bool};
            return {define(op == "&&" ? "and" : "or", v, Type::Bool), Type::Bool};
        }
        static const std::map<std::string, Op> cmp_ops = {{"<", Op::Lt},  {"<=", Op::Le}, {">", Op::Gt},
                                                          {">=", Op::Ge}, {"==", Op::Eq}, {"!=", Op::Ne}};
        if (auto it = cmp_ops.find(op); it != cmp_ops.end()) {
            bool eq = op == "==" || op == "!=";
            Typed a = lower(e.kids[0], Type::Int);
            Typed b = lower(e.kids[1], eq ? a.t : Type::Int);
            if (eq) {
                if (a.t != b.t) fail("type error: comparing Int with Bool", e.line, e.col);
            } else {
                require(a, Type::Int, e.kids[0]);
                require(b, Type::Int, e.kids[1]);
            }
            if (a.e.is_const() && b.e.is_const()) {
                bool r;
                if (a.t == Type::Bool) {
                    r = (a.e.bool_value() == b.e.bool_value()) == (op == "==");
                } else {
                    Int x = a.e.int_value(), y = b.e.int_value();
                    r = op == "<" ? x < y : op == "<=" ? x <= y : op == ">" ? x > y : op == ">=" ? x >= y
                                                                                    : op == "==" ? x == y
                                                                                                 : x != y;
                }
                return {Expr::bool_const(r), Type::Bool};
            }
            Expr c = Expr::cmp(it->second, a.e, b.e);
            if (branch) {
                fresh("cmp");
                return {c, Type::Bool};
            }
            return {define("cmp", c, Type::Bool), Type::Bool};
        }
        Typed a = lower(e.kids[0], Type::Int);
        Typed b = lower(e.kids[1], Type::Int);
        require(a, Type::Int, e.kids[0]);
        require(b, Type::Int, e.kids[1]);
        bool ca = a.e.op() == Op::IntConst, cb = b.e.op() == Op::IntConst;
        if (ca && cb) return {Expr::int_const(fold(op, a.e.int_value(), b.e.int_value(), e)), Type::Int};
        if (op == "+") return {define("add", Expr::add(a.e, b.e), Type::Int), Type::Int};
        if (op == "-") return {define("sub", Expr::sub(a.e, b.e), Type::Int), Type::Int};
        if (op == "*" && (ca || cb)) return {define("mul", Expr::mul(a.e, b.e), Type::Int), Type::Int};
        std::string what = op == "*" ? "product of two variables" : op == "/" ? "division" : "remainder";
        if (!opts_.havoc_unsupported)
            fail("unsupported construct: " + what + " (use --havoc-unsupported to abstract it)", e.line, e.col);
        std::string base = op == "*" ? "mul" : op == "/" ? "div" : "rem";
        return {havoc(base, Type::Int, std::nullopt, std::nullopt), Type::Int};
    }

    Expr condition(const Ex& e) {
        Typed c = lower(e, Type::Bool, true);
        require(c, Type::Bool, e);
        return c.e;
    }

    void bind(const std::string& var, Expr v, Type t) {
        env_[var] = std::move(v);
        var_type_[var] = t;
    }

    static void assigned_vars(const std::vector<St>& body, std::set<std::string>& out) {
        for (const auto& s : body) {
            if (s.kind == St::Assign || s.kind == St::Decl) out.insert(s.var);
            assigned_vars(s.body, out);
            assigned_vars(s.orelse, out);
        }
    }

    std::string phi_name(const std::string& var) { return fresh(var + "." + std::to_string(phi_count_[var]++)); }

    void lower_seq(const std::vector<St>& stmts, bool in_loop) {
        for (const auto& s : stmts) {
            if (cur_ == kNone) fail("unreachable statement after return", s.line, s.col);
            lower_stmt(s, in_loop);
        }
    }

    void lower_stmt(const St& s, bool in_loop) {
        switch (s.kind) {
            case St::Decl: {
                if (env_.count(s.var)) fail("redeclaration of '" + s.var + "'", s.line, s.col);
                if (!s.has_init) {
                    bind(s.var, havoc(s.var, s.decl_type, std::nullopt, std::nullopt), s.decl_type);
                    return;
                }
                Typed v = lower(s.e, s.decl_type);
                require(v, s.decl_type, s.e);
                bind(s.var, v.e, v.t);
                return;
            }
            case St::Assign: {
                if (loop_vars_.count(s.var)) fail("cannot assign loop variable '" + s.var + "'", s.line, s.col);
                auto known = var_type_.find(s.var);
                Type want = known != var_type_.end() && env_.count(s.var) ? known->second : Type::Int;
                Typed v = lower(s.e, want);
                if (env_.count(s.var) && v.t != var_type_[s.var])
                    fail("type error: '" + s.var + "' changes type", s.line, s.col);
                bind(s.var, v.e, v.t);
                return;
            }
            case St::Assume: blocks_[cur_].assumes.push_back(condition(s.e)); return;
            case St::Cost:
                block_cost_[cur_] += s.a;
                any_cost_ = true;
                return;
            case St::Return:
                if (in_loop) fail("return inside a loop is not supported", s.line, s.col);
                return_sites_.push_back(cur_);
                cur_ = kNone;
                return;
            case St::If: lower_if(s, in_loop); return;
            case St::While:
            case St::For: lower_loop(s); return;
        }
    }

    void lower_if(const St& s, bool in_loop) {
        Expr cond = condition(s.e);
        BlockId decision = cur_;
        BlockId then_b = new_block("if.then");
        BlockId else_b = s.orelse.empty() ? kNone : new_block("if.else");
        BlockId merge = new_block("if.end");
        blocks_[decision].term = Branch{cond, then_b, else_b == kNone ? merge : else_b};

        auto before = env_;
        auto before_types = var_type_;

        emit(then_b);
        lower_seq(s.body, in_loop);
        BlockId then_end = cur_;
        auto env_then = env_;
        auto types_then = var_type_;
        if (then_end != kNone) blocks_[then_end].term = Goto{merge};

        BlockId else_end = decision;
        auto env_else = before;
        auto types_else = before_types;
        if (else_b != kNone) {
            env_ = before;
            var_type_ = before_types;
            emit(else_b);
            lower_seq(s.orelse, in_loop);
            else_end = cur_;
            env_else = env_;
            types_else = var_type_;
            if (else_end != kNone) blocks_[else_end].term = Goto{merge};
        }

        if (then_end == kNone && else_end == kNone) {
            cur_ = kNone;
            return;
        }
        emit(merge);
        if (then_end == kNone || else_end == kNone) {
            env_ = then_end == kNone ? env_else : env_then;
            var_type_ = then_end == kNone ? types_else : types_then;
            // Keep only names visible before the if, as for two-armed joins.
            for (auto it = env_.begin(); it != env_.end();)
                it = before.count(it->first) ? std::next(it) : env_.erase(it);
            return;
        }
        env_ = before;
        var_type_ = before_types;
        for (const auto& [var, old] : before) {
            const Expr& a = env_then.at(var);
            const Expr& b = env_else.at(var);
            if (a == b) {
                env_[var] = a;
                continue;
            }
            std::string name = phi_name(var);
            blocks_[merge].phis.push_back(Phi{name, {{then_end, a}, {else_end, b}}});
            types_[name] = var_type_[var];
            env_[var] = Expr::var(name);
        }
    }

    void lower_loop(const St& s) {
        bool is_for = s.kind == St::For;
        std::string kw = is_for ? "for" : "while";
        if (is_for && env_.count(s.var)) fail("loop variable '" + s.var + "' shadows a variable", s.line, s.col);

        BlockId pre = cur_;
        BlockId header = new_block(kw + ".cond");
        BlockId body = new_block(kw + ".body");
        BlockId latch = is_for ? new_block("for.inc") : kNone;
        BlockId end = new_block(kw + ".end");
        blocks_[pre].term = Goto{header};
        emit(header);

        auto outer = env_;
        auto outer_types = var_type_;
        std::set<std::string> assigned;
        assigned_vars(s.body, assigned);
        std::vector<std::pair<std::string, std::size_t>> carried;  // var, phi index
        if (is_for) {
            std::string name = phi_name(s.var);
            blocks_[header].phis.push_back(Phi{name, {{pre, Expr::int_const(s.a)}}});
            types_[name] = Type::Int;
            bind(s.var, Expr::var(name), Type::Int);
            loop_vars_.insert(s.var);
        }
        for (const auto& var : assigned) {
            if (!outer.count(var)) continue;
            std::string name = phi_name(var);
            blocks_[header].phis.push_back(Phi{name, {{pre, outer.at(var)}}});
            types_[name] = outer_types.at(var);
            carried.push_back({var, blocks_[header].phis.size() - 1});
            env_[var] = Expr::var(name);
        }
        Expr cond;
        if (is_for) {
            Expr i = env_.at(s.var);
            fresh("cmp");
            cond = Expr::cmp(Op::Lt, i, Expr::int_const(s.b));
        } else {
            cond = condition(s.e);
        }
        blocks_[header].term = Branch{cond, body, end};
        auto header_env = env_;

        emit(body);
        lower_seq(s.body, true);
        if (is_for) {
            blocks_[cur_].term = Goto{latch};
            emit(latch);
            Expr inc = define("inc", Expr::add(env_.at(s.var), Expr::int_const(1)), Type::Int);
            blocks_[header].phis.front().sources.push_back({latch, inc});
        } else {
            latch = cur_;
        }
        blocks_[latch].term = Goto{header};
        for (const auto& [var, idx] : carried) blocks_[header].phis[idx].sources.push_back({latch, env_.at(var)});

        emit(end);
        env_ = outer;
        var_type_ = outer_types;
        for (const auto& [var, idx] : carried) {
            std::string name = fresh(var + ".lcssa");
            const Phi& hp = blocks_[header].phis[idx];
            blocks_[end].phis.push_back(Phi{name, {{header, Expr::var(hp.target)}}});
            types_[name] = types_[hp.target];
            env_[var] = Expr::var(name);
        }
        if (is_for) loop_vars_.erase(s.var);
        if (is_for)
            loop_bounds_[header] = std::max<Int>(0, s.b - s.a);
        else if (s.has_bound)
            loop_bounds_[header] = s.b;
    }

    ParsedInput finish(BlockId entry, BlockId exit) {
        std::vector<BlockId> perm(blocks_.size(), kNone);
        for (BlockId b = 0; b < blocks_.size(); ++b) perm[b] = order_[b];
        ParsedInput out;
        Program& p = out.program;
        p.blocks.resize(emitted_);
        auto map_id = [&](BlockId b) {
            if (perm[b] == kNone) throw Error("ir", "internal error: reference to an unplaced block");
            return perm[b];
        };
        for (BlockId b = 0; b < blocks_.size(); ++b) {
            if (perm[b] == kNone) continue;
            Block blk = blocks_[b];
            for (auto& ph : blk.phis)
                for (auto& src : ph.sources) src.first = map_id(src.first);
            if (auto* br = std::get_if<Branch>(&blk.term)) {
                br->then_target = map_id(br->then_target);
                br->else_target = map_id(br->else_target);
            } else if (auto* g = std::get_if<Goto>(&blk.term)) {
                g->target = map_id(g->target);
            }
            p.blocks[perm[b]] = std::move(blk);
        }
        p.entry = map_id(entry);
        p.exit = map_id(exit);
        for (auto h : inputs_) {
            h.block = map_id(h.block);
            p.inputs.push_back(h);
        }
        for (const auto& [name, t] : types_)
            if (!p.find_input(name)) p.types[name] = t;
        for (const auto& [b, k] : loop_bounds_) p.loop_bounds[map_id(b)] = k;
        p.finalize();

        CostModel& c = out.costs;
        for (const Edge& e : p.edges()) c.edge[{e.from, e.to}] = 0;
        if (any_cost_) {
            c.convention = "block";
            for (const auto& [b, k] : block_cost_)
                if (k) c.block[map_id(b)] = k;
        } else {
            c.convention = "instruction-count";
            std::vector<Int> count(p.num_blocks(), 1);
            for (const auto& h : p.inputs) ++count[h.block];
            for (BlockId b = 0; b < p.num_blocks(); ++b) {
                count[b] += static_cast<Int>(p.blocks[b].phis.size() + p.blocks[b].assigns.size());
                c.block[b] = count[b];
            }
        }
        validate_program(p, false);
        return out;
    }

    MinilangOptions opts_;
    std::vector<Block> blocks_;
    std::vector<BlockId> order_;
    BlockId emitted_ = 0;
    BlockId cur_ = kNone;
    std::set<std::string> used_;
    int unique_ = 0;
    std::map<std::string, int> phi_count_;
    std::map<std::string, Expr> env_;
    std::map<std::string, Type> var_type_;
    std::map<std::string, Type> types_;
    std::set<std::string> loop_vars_;
    std::vector<HavocVar> inputs_;
    std::vector<BlockId> return_sites_;
    std::map<BlockId, Int> block_cost_;
    std::map<BlockId, Int> loop_bounds_;
    bool any_cost_ = false;
};

}  // namespace

ParsedInput parse_minilang(std::string_view text, const MinilangOptions& opts) {
    Parser parser(lex(text));
    auto prog = parser.program();
    return Lowerer(opts).run(prog);
}

}  // namespace wcet
