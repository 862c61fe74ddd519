#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wcet/omt.hpp"

namespace wcet {

/// Options of one run, as given on the command line.
struct RunConfig {
    std::string input;
    std::string format = "auto";  // auto | minilang | cfg
    std::string encoding = "sum";
    std::string cuts = "hierarchical";
    std::string strategy = "binary";
    bool refine_portions = false;
    std::string solver;  // command line; empty means the default solver
    int timeout_ms = 10000;
    bool incremental = false;
    std::string output = "text";  // text | json
    std::string emit_smt_dir;
    bool havoc_unsupported = false;
    std::uint64_t seed = 1;
    bool verbose = false;
    std::optional<Int> default_loop_bound;
};

struct ReportWitness {
    std::vector<std::string> blocks;
    std::vector<std::string> edges;
    std::map<std::string, Value> inputs;
    Int cost = 0;
};

struct Report {
    std::string program;
    Int syntactic_bound = 0;
    Int wcet = 0;
    /// (syntactic - wcet) / syntactic, 0 when the bound is 0.
    double diff = 0;
    bool sound = true;
    std::string outcome;
    std::optional<ReportWitness> witness;
    std::size_t cuts = 0;
    int queries = 0;
    double wall_ms = 0;
    std::vector<CutBound> per_cut_bounds;
    RunConfig config;
};

Report make_report(const Analysis& a, const RunConfig& cfg, double wall_ms);

/// JSON document; parse_report_json(emit_report_json(r)) reproduces r.
std::string emit_report_json(const Report& r);
Report parse_report_json(const std::string& text);

std::string format_report_text(const Report& r);

}  // namespace wcet
