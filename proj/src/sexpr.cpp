#include "wcet/sexpr.hpp"

#include <cctype>

#include "wcet/error.hpp"

namespace wcet {
namespace {

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }

    SExpr read() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", line_, col_);
        SExpr e;
        e.line = line_;
        e.column = col_;
        char c = text_[pos_];
        if (c == '(') {
            advance();
            e.is_atom = false;
            for (;;) {
                skip_space();
                if (pos_ >= text_.size())
                    throw ParseError("unbalanced '(' opened here", e.line, e.column);
                if (text_[pos_] == ')') {
                    advance();
                    return e;
                }
                e.items.push_back(read());
            }
        }
        if (c == ')') throw ParseError("unexpected ')'", line_, col_);
        if (c == '|') {
            std::size_t start = pos_;
            advance();
            while (pos_ < text_.size() && text_[pos_] != '|') advance();
            if (pos_ >= text_.size()) throw ParseError("unterminated |symbol|", e.line, e.column);
            advance();
            e.atom = std::string(text_.substr(start, pos_ - start));
            return e;
        }
        if (c == '"') {
            std::size_t start = pos_;
            advance();
            while (pos_ < text_.size()) {
                if (text_[pos_] == '"') {
                    // SMT-LIB escapes a quote by doubling it.
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
                        advance();
                        advance();
                        continue;
                    }
                    break;
                }
                advance();
            }
            if (pos_ >= text_.size()) throw ParseError("unterminated string", e.line, e.column);
            advance();
            e.atom = std::string(text_.substr(start, pos_ - start));
            return e;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
            advance();
        }
        e.atom = std::string(text_.substr(start, pos_ - start));
        return e;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

void print(const SExpr& e, std::string& out) {
    if (e.is_atom) {
        out += e.atom;
        return;
    }
    out += '(';
    for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        print(e.items[i], out);
    }
    out += ')';
}

}  // namespace

std::vector<SExpr> parse_sexprs(std::string_view text) {
    Reader r(text);
    std::vector<SExpr> out;
    while (!r.at_end()) out.push_back(r.read());
    return out;
}

SExpr parse_sexpr(std::string_view text) {
    Reader r(text);
    SExpr e = r.read();
    if (!r.at_end()) throw ParseError("trailing input after expression");
    return e;
}

std::string to_string(const SExpr& e) {
    std::string out;
    print(e, out);
    return out;
}

}  // namespace wcet
