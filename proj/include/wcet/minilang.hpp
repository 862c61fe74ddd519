#pragma once

#include <string_view>

#include "wcet/program.hpp"

namespace wcet {

/// A parsed input: the program plus the costs it carries.
struct ParsedInput {
    Program program;
    CostModel costs;
};

struct MinilangOptions {
    /// Abstract non-linear arithmetic, `/` and `%` as nondeterministic values
    /// instead of rejecting them.
    bool havoc_unsupported = false;
};

/// Parses the structured mini-language (grammar in docs/minilang.md).
///
/// Values are named the way clang names LLVM instructions (`call`, `add`,
/// `cmp`, ... with a shared collision counter), and blocks `entry`,
/// `if.then`, `if.else`, `if.end`, `for.cond`, ... The result may contain
/// loops; `loop_bounds` records each loop header's trip-count bound.
///
/// Costs: `cost N;` adds N cycles to the current block. Without any cost
/// statement every block costs one cycle per instruction (terminator
/// included), the "instruction-count" convention. Edge costs are zero.
ParsedInput parse_minilang(std::string_view text, const MinilangOptions& opts = {});

}  // namespace wcet
