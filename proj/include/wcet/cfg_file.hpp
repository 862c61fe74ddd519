#pragma once

#include <string>
#include <string_view>

#include "wcet/minilang.hpp"

namespace wcet {

/// Reads a CFG interchange document (JSON, schema in docs/formats.md).
///
/// Block references use block ids (names). Expressions are in prefix form,
/// e.g. `(+ call 10)`. A block's `term` may be omitted, in which case it is
/// derived from its listed out-edges. Every control-flow edge must appear in
/// `edges` with a cost.
ParsedInput parse_cfg_file(std::string_view text);

/// Writes `p` and `costs` in the same format; parse_cfg_file reads it back
/// into an isomorphic program.
std::string emit_cfg_file(const Program& p, const CostModel& costs);

}  // namespace wcet
