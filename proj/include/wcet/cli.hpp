#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wcet/bench.hpp"
#include "wcet/minilang.hpp"
#include "wcet/omt.hpp"
#include "wcet/report.hpp"

namespace wcet {

/// Process exit codes.
enum ExitCode : int {
    kExitExact = 0,
    kExitError = 1,
    kExitUpperBound = 2,  // sound but not exact: the solver gave up somewhere
    kExitInfeasible = 3,
};

struct OracleArgs {
    bool exhaustive = false;
    std::size_t path_limit = 4096;
};

struct BenchArgs {
    std::string ns = "10..16";
    std::string modes = "no-cuts,leaf-cuts";
    std::string kind = "unsat-check";
    std::string shape = "per-fragment";
    int repeats = 1;
    int jobs = 1;
};

struct GenArgs {
    std::string what = "diamond";  // diamond | random
    int n = 5;
    std::string shape = "per-test";
};

/// Reads the input file; "auto" picks cfg for .json files, else minilang.
ParsedInput load_input(const RunConfig& cfg);

SolverConfig solver_config(const RunConfig& cfg);

/// Checks option values and builds the pipeline options.
AnalyzeOptions analyze_options(const RunConfig& cfg);

/// "10..16", "1,2,5" or a mix such as "1..3,8".
std::vector<int> parse_int_list(const std::string& s);

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_emit_smt(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_oracle(const RunConfig& cfg, const OracleArgs& args, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, const BenchArgs& args, std::ostream& out, std::ostream& err);
int cmd_dump(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_gen(const RunConfig& cfg, const GenArgs& args, std::ostream& out, std::ostream& err);

}  // namespace wcet
