#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wcet/minilang.hpp"
#include "wcet/omt.hpp"
#include "wcet/program.hpp"
#include "wcet/solve.hpp"

namespace wcet {

/// Two ways of laying out the n fragments of the diamond program.
///
/// PerTest follows the source listing: two if-then-else tests per fragment
/// reading the same b_i, block costs 2/3 then 3/2. Each test is its own
/// portion; the fragment is a pair of them.
///
/// PerFragment merges the two tests of a fragment into one decision on b_i
/// (the two other combinations are infeasible anyway): edge costs 2 then 3
/// on one side, 3 then 2 on the other. The fragment is one portion.
enum class DiamondShape { PerFragment, PerTest };

std::string_view to_string(DiamondShape s);
DiamondShape parse_diamond_shape(std::string_view s);

struct DiamondSpec {
    int n = 1;
    DiamondShape shape = DiamondShape::PerFragment;
};

/// Throws wcet::Error("bench") for n < 1.
ParsedInput gen_diamond(const DiamondSpec& spec);

/// Mini-language text of the PerTest diamond program.
std::string diamond_minilang(int n);

struct OracleOptions {
    SolverConfig solver;
    std::size_t path_limit = 4096;
    /// Query every path instead of stopping at the costliest feasible one.
    bool exhaustive = false;
};

struct OracleResult {
    bool feasible = false;  // some path is feasible
    Int wcet = 0;
    std::vector<BlockId> path;
    std::map<std::string, Value> inputs;
    std::size_t paths = 0;
    std::size_t queries = 0;
    std::size_t feasible_paths = 0;  // counted in exhaustive mode
};

/// Number of entry-to-exit paths, saturating at limit + 1.
std::size_t count_paths(const Program& p, std::size_t limit);

/// Brute force: one satisfiability query per structural path, each written
/// from the program directly with its own variable names. Paths are checked
/// by decreasing cost. Throws wcet::Error("bench") over the path budget or
/// when the solver cannot decide a path that matters.
OracleResult oracle_wcet(const Program& p, const CostModel& costs, const OracleOptions& opts);
OracleResult oracle_wcet_serial(const Program& p, const CostModel& costs, const OracleOptions& opts);

struct RandomProgramOptions {
    int max_blocks = 12;
    int max_decisions = 6;
    int max_inputs = 3;
    Int input_range = 10;
    Int max_cost = 20;
};

/// Deterministic in the seed: mini-language text with 1..max_inputs ranged
/// inputs and linear guards.
std::string random_minilang(std::uint64_t seed, const RandomProgramOptions& opts = {});

/// Parsed random_minilang with random edge costs in [0, max_cost].
ParsedInput random_program(std::uint64_t seed, const RandomProgramOptions& opts = {});

enum class BenchMode { NoCuts, LeafCuts, Hierarchical, CutOrdered };
std::string_view to_string(BenchMode m);
BenchMode parse_bench_mode(std::string_view s);

enum class BenchKind {
    Maximize,    // full optimization
    UnsatCheck,  // one query: cost >= 5n + 1
};
std::string_view to_string(BenchKind k);
BenchKind parse_bench_kind(std::string_view s);

struct BenchRow {
    std::string instance;
    BenchMode mode = BenchMode::NoCuts;
    int n = 0;
    std::optional<Int> wcet;
    int queries = 0;
    double wall_ms = 0;
    std::string verdict;
};

struct BenchOptions {
    std::vector<int> ns;
    std::vector<BenchMode> modes;
    BenchKind kind = BenchKind::Maximize;
    DiamondShape shape = DiamondShape::PerFragment;
    /// Solver budget per query.
    int budget_ms = 60000;
    SolverConfig solver;
    /// Runs per row; the row reports the median wall time.
    int repeats = 1;
    bool refine_portions = false;
    /// Worker slots; rows are independent.
    int jobs = 1;
};

/// Rows in (n, mode) order.
std::vector<BenchRow> run_scaling(const BenchOptions& opts);

/// One run of one (n, mode) cell.
BenchRow run_one(int n, BenchMode mode, const BenchOptions& opts);

std::string to_csv(const std::vector<BenchRow>& rows);

}  // namespace wcet
