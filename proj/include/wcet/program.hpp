#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wcet/expr.hpp"

namespace wcet {

using BlockId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Join of SSA values; one source per predecessor block.
struct Phi {
    std::string target;
    std::vector<std::pair<BlockId, Expr>> sources;
};

struct Assign {
    std::string var;
    Expr value;
};

struct Branch {
    Expr cond;
    BlockId then_target;
    BlockId else_target;
};

struct Goto {
    BlockId target;
};

struct Return {};

using Terminator = std::variant<Branch, Goto, Return>;

struct Block {
    std::string name;
    std::vector<Phi> phis;
    std::vector<Assign> assigns;
    /// Conditions that must hold whenever the block executes.
    std::vector<Expr> assumes;
    Terminator term = Return{};
};

/// Nondeterministic value, optionally range constrained. Program inputs and
/// havoc-abstracted constructs are both represented this way.
struct HavocVar {
    std::string name;
    Type type = Type::Int;
    std::optional<Int> lo;
    std::optional<Int> hi;
    BlockId block = 0;
};

struct Edge {
    EdgeId id;
    BlockId from;
    BlockId to;
    Expr guard;
};

/// Control-flow graph of SSA basic blocks.
///
/// Fill the public fields, then call `finalize()` to build the edge index.
/// Edges are numbered block by block in successor order (then before else),
/// so numbering is deterministic for a given block order.
class Program {
public:
    std::string name = "program";
    std::vector<Block> blocks;
    BlockId entry = 0;
    BlockId exit = 0;
    std::vector<HavocVar> inputs;
    std::map<std::string, Type> types;
    /// Trip-count bounds by loop header, consumed by unroll().
    std::map<BlockId, Int> loop_bounds;

    void finalize();

    std::size_t num_blocks() const { return blocks.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<EdgeId>& out_edges(BlockId b) const { return out_[b]; }
    const std::vector<EdgeId>& in_edges(BlockId b) const { return in_[b]; }
    std::vector<BlockId> successors(BlockId b) const;
    std::vector<BlockId> predecessors(BlockId b) const;
    std::optional<EdgeId> find_edge(BlockId from, BlockId to) const;
    std::optional<BlockId> find_block(const std::string& name) const;
    const HavocVar* find_input(const std::string& name) const;
    std::optional<Type> type_of_var(const std::string& name) const;

private:
    std::vector<Edge> edges_;
    std::vector<std::vector<EdgeId>> out_;
    std::vector<std::vector<EdgeId>> in_;
};

std::vector<BlockId> successors_of(const Terminator& t);

/// Cycle cost annotations. Edge costs are keyed by (from, to) block pair;
/// block costs are optional and charged when the block executes.
struct CostModel {
    std::map<std::pair<BlockId, BlockId>, Int> edge;
    std::map<BlockId, Int> block;
    /// Which convention the input used: "edge", "block", "edge+block" or
    /// "instruction-count".
    std::string convention = "edge";

    /// Cost of an edge; throws wcet::Error when the edge has no cost.
    Int edge_cost(const Program& p, EdgeId e) const;
    Int block_cost(BlockId b) const;
    bool has_block_costs() const;
    /// Throws unless every edge of `p` has a nonnegative cost.
    void check_total(const Program& p) const;
};

/// Returns a uniform zero-cost model for `p`.
CostModel zero_costs(const Program& p);

struct CycleReport {
    std::vector<BlockId> blocks;
};

/// Acyclicity check over the edge relation; reports one cycle otherwise.
std::optional<CycleReport> check_loop_free(const Program& p);

/// Structural and SSA validation. Checks: single entry without incoming
/// edges, single Return exit, reachability both ways, phi/incoming-edge
/// bijection, unique definitions, well-typed linear expressions, Boolean
/// branch conditions, and definitions dominating their uses.
/// When `require_loop_free` is false, loops are allowed (pre-unroll input).
void validate_program(const Program& p, bool require_loop_free = true);

/// Infers `types` for assigns and phis whose type is not yet recorded.
void infer_types(Program& p);

/// Replaces every non-linear assignment by a fresh unconstrained input of the
/// same name. Returns the number of abstracted definitions.
std::size_t havoc_unsupported(Program& p);

/// Conventional SMT-style names.
std::string block_var(BlockId b);
std::string edge_var(BlockId from, BlockId to);
std::string edge_cost_var(BlockId from, BlockId to);
std::string block_cost_var(BlockId b);
std::string ssa_var(const std::string& name);

}  // namespace wcet
