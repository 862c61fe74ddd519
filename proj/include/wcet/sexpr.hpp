#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wcet {

/// Minimal S-expression tree used for the prefix expression syntax of the
/// CFG interchange format and for reading solver responses.
struct SExpr {
    bool is_atom = true;
    std::string atom;
    std::vector<SExpr> items;
    int line = 1;
    int column = 1;

    bool is_list() const { return !is_atom; }
    bool is_symbol(std::string_view s) const { return is_atom && atom == s; }
};

/// Parses every top-level S-expression in `text`. `|quoted|` symbols and
/// `"strings"` are kept verbatim as atoms (strings retain their quotes).
/// Throws ParseError with a position on unbalanced input.
std::vector<SExpr> parse_sexprs(std::string_view text);

/// Parses exactly one S-expression.
SExpr parse_sexpr(std::string_view text);

std::string to_string(const SExpr& e);

}  // namespace wcet
