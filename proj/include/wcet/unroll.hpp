#pragma once

#include <optional>
#include <vector>

#include "wcet/program.hpp"

namespace wcet {

struct UnrollOptions {
    /// Bound for loops that carry none; without it such loops are an error.
    std::optional<Int> default_bound;
    /// Largest accepted trip-count bound.
    Int limit = 1000;
};

struct UnrollResult {
    Program program;
    /// origin[b]: block of the input program that block b copies.
    std::vector<BlockId> origin;

    /// Costs of the unrolled program, taken from the copied blocks and edges.
    CostModel remap_costs(const CostModel& costs) const;
};

/// Unrolls every loop up to its trip-count bound.
///
/// Loops are natural loops with a single latch whose only exits leave from
/// the header. A loop of bound K becomes K+1 header copies and K body copies
/// in sequence; the last header copy assumes the loop condition is false.
/// Blocks and loop-defined variables of copy j are renamed `name@j`. Values
/// leaving a loop must pass through a phi of its exit block.
UnrollResult unroll(const Program& p, const UnrollOptions& opts = {});

}  // namespace wcet
