#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wcet/program.hpp"

namespace wcet {

/// Topological order of a loop-free program; ties go to the smaller block id.
/// Throws wcet::Error("cfgkit") if the graph has a cycle.
std::vector<BlockId> topo_order(const Program& p);

/// Reverse post-order from entry (valid on cyclic graphs too).
std::vector<BlockId> reverse_post_order(const Program& p);

/// Immediate-dominator tree. `idom[entry] == entry`.
struct DomTree {
    BlockId root = 0;
    std::vector<BlockId> idom;

    bool dominates(BlockId a, BlockId b) const;
    bool strictly_dominates(BlockId a, BlockId b) const { return a != b && dominates(a, b); }
};

/// Iterative data-flow dominators in reverse post-order (Cooper, Harvey,
/// Kennedy). Works on any graph whose blocks are all reachable from entry;
/// throws wcet::Error("cfgkit") naming an unreachable block otherwise.
DomTree immediate_dominators(const Program& p);

/// A set of edges and blocks whose summed cost is bounded by a cut.
///
/// For portions found between a merge block and its immediate dominator,
/// `edges` holds every edge on a header-to-merge path and `blocks` holds the
/// blocks whose block cost the portion accounts for: the inner blocks plus
/// the merge (the header's own cost is outside the portion).
struct Portion {
    std::size_t id = 0;
    BlockId header = 0;
    BlockId merge = 0;
    std::vector<EdgeId> edges;   // sorted
    std::vector<BlockId> blocks;  // sorted
    Int bound = 0;
    /// True when `edges` are exactly the header-to-merge path edges and no
    /// inner block has an edge leaving them, so the region is a sub-program
    /// with the header as entry and the merge as exit.
    bool contiguous = true;
    /// Whole program: every edge and block. Its sum is the total cost.
    bool whole_program = false;

    std::string label(const Program& p) const;
};

/// Block/edge membership masks used by the restricted longest-path pass.
struct Scope {
    std::vector<bool> edge_in;
    std::vector<bool> block_in;

    static Scope whole(const Program& p);
    static Scope of(const Program& p, const Portion& portion);
};

/// All edges on some `from` to `to` path.
std::vector<EdgeId> region_edges(const Program& p, BlockId from, BlockId to);

/// One portion per merge block (at least two incoming edges) whose immediate
/// dominator reaches it along at least two distinct paths. Ordered by the
/// topological position of header, then of merge. Bounds are left at 0.
std::vector<Portion> find_portions(const Program& p, const DomTree& dt);

/// Pairwise grouping of adjacent outermost portions, recursively.
///
/// Leaves are the outermost portions, taken in order and skipping any that
/// overlap an earlier leaf. A parent covers the region from its left child's
/// header to its right child's merge when that region contains both
/// children; otherwise it is the plain union and marked non-contiguous.
///
/// `nodes` holds the leaves first (indices 0..leaves-1), then internal nodes
/// level by level. `children[i]` is {-1,-1} for leaves. When there are at
/// least two leaves the root is the whole program.
struct PortionTree {
    std::vector<Portion> nodes;
    std::vector<std::pair<int, int>> children;
    std::size_t num_leaves = 0;
    int root = -1;

    bool empty() const { return nodes.empty(); }
    bool is_leaf(std::size_t i) const { return i < num_leaves; }
};

PortionTree group_portions(const std::vector<Portion>& portions, const Program& p);

/// w[b]: worst cost restricted to `scope` over all paths from entry up to
/// and including block b.
struct LongestPathTable {
    std::vector<Int> w;
};

LongestPathTable longest_paths(const Program& p, const CostModel& costs, const Scope& scope);

/// Longest syntactic path cost restricted to `scope`, in one topological pass.
Int syntactic_bound(const Program& p, const CostModel& costs, const Scope& scope);
Int syntactic_bound(const Program& p, const CostModel& costs, const Portion& portion);
Int syntactic_bound(const Program& p, const CostModel& costs);

/// Fills `bound` of every node. The OpenMP variant runs nodes in parallel;
/// the serial one is kept as the reference.
void compute_bounds(std::vector<Portion>& portions, const Program& p, const CostModel& costs);
void compute_bounds_serial(std::vector<Portion>& portions, const Program& p, const CostModel& costs);
inline void compute_bounds(PortionTree& tree, const Program& p, const CostModel& costs) {
    compute_bounds(tree.nodes, p, costs);
}

/// Portion covering every edge and block; its sum is the total cost.
Portion whole_program_portion(const Program& p);

/// Deterministic text dump of dominators and portions for golden tests.
std::string dump_structure(const Program& p, const DomTree& dt, const std::vector<Portion>& portions,
                           const PortionTree& tree);

}  // namespace wcet
