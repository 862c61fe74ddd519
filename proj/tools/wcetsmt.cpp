// wcetsmt: worst-case execution time by SMT optimization.
#include <CLI11.hpp>

#include <iostream>

#include "wcet/cli.hpp"

int main(int argc, char** argv) {
    using namespace wcet;
    RunConfig cfg;
    OracleArgs oracle;
    BenchArgs bench;
    GenArgs gen;
    Int loop_bound = 0;

    CLI::App app{"WCET analysis of loop-free (or bounded-loop) programs by SMT optimization"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    app.add_option("--input,-i", cfg.input, "Program file (.wcl mini-language or .json CFG)");
    app.add_option("--format", cfg.format, "auto|minilang|cfg")->capture_default_str();
    app.add_option("--encoding", cfg.encoding, "Cost encoding: sum|counter")->capture_default_str();
    app.add_option("--cuts", cfg.cuts, "none|leaves|hierarchical")->capture_default_str();
    app.add_option("--strategy", cfg.strategy, "binary|cut-ordered")->capture_default_str();
    app.add_flag("--refine-portions", cfg.refine_portions, "Bound portions by a recursive analysis");
    app.add_option("--solver", cfg.solver, "Solver command line reading SMT-LIB on stdin (default: $WCET_SMT_SOLVER or 'z3 -in')");
    app.add_option("--timeout-ms", cfg.timeout_ms, "Budget per solver query")->capture_default_str();
    app.add_flag("--incremental", cfg.incremental, "One solver process with push/pop");
    app.add_option("--output", cfg.output, "text|json")->capture_default_str();
    app.add_option("--emit-smt-dir", cfg.emit_smt_dir, "Also write the SMT-LIB scripts with and without cuts here");
    app.add_flag("--havoc-unsupported", cfg.havoc_unsupported, "Treat non-linear arithmetic as unknown values");
    app.add_option("--seed", cfg.seed, "Seed for generators")->capture_default_str();
    app.add_option("--loop-bound", loop_bound, "Trip-count bound for loops that carry none");
    app.add_flag("--verbose,-v", cfg.verbose, "Trace solver queries on stderr");

    auto* analyze = app.add_subcommand("analyze", "Compute the WCET (default)");
    auto* emit = app.add_subcommand("emit-smt", "Print or write the SMT-LIB encoding");
    auto* orc = app.add_subcommand("oracle", "Brute-force WCET by path enumeration");
    orc->add_flag("--exhaustive", oracle.exhaustive, "Query every path");
    orc->add_option("--path-limit", oracle.path_limit, "Refuse programs with more paths")->capture_default_str();
    auto* ben = app.add_subcommand("bench", "Diamond scaling benchmark, CSV on stdout");
    ben->add_option("--diamond,--n", bench.ns, "Sizes, e.g. 10..16 or 1,2,5")->capture_default_str();
    ben->add_option("--modes", bench.modes, "no-cuts,leaf-cuts,hierarchical,cut-ordered")->capture_default_str();
    ben->add_option("--kind", bench.kind, "unsat-check|maximize")->capture_default_str();
    ben->add_option("--shape", bench.shape, "per-fragment|per-test")->capture_default_str();
    ben->add_option("--repeats", bench.repeats, "Runs per cell (median time)")->capture_default_str();
    ben->add_option("--jobs", bench.jobs, "Parallel cells")->capture_default_str();
    auto* dump = app.add_subcommand("dump", "Print dominators and portions");
    auto* gn = app.add_subcommand("gen", "Print a generated program");
    gn->add_option("what", gen.what, "diamond|random")->capture_default_str();
    gn->add_option("--n", gen.n, "Diamond fragments")->capture_default_str();
    gn->add_option("--shape", gen.shape, "per-test (mini-language) | per-fragment (CFG)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    if (loop_bound > 0) cfg.default_loop_bound = loop_bound;

    if (*emit) return cmd_emit_smt(cfg, std::cout, std::cerr);
    if (*orc) return cmd_oracle(cfg, oracle, std::cout, std::cerr);
    if (*ben) return cmd_bench(cfg, bench, std::cout, std::cerr);
    if (*dump) return cmd_dump(cfg, std::cout, std::cerr);
    if (*gn) return cmd_gen(cfg, gen, std::cout, std::cerr);
    (void)analyze;
    return cmd_analyze(cfg, std::cout, std::cerr);
}
