#include "wcet/cli.hpp"

#include <json.hpp>

#include <chrono>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wcet/cfg_file.hpp"
#include "wcet/cfgkit.hpp"
#include "wcet/error.hpp"

namespace wcet {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cli", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !(out.flush())) throw Error("cli", "cannot write '" + path.string() + "'");
}

int report_error(std::ostream& err, const std::exception& e) {
    if (const auto* w = dynamic_cast<const Error*>(&e))
        err << "error [" << w->module() << "]: " << w->what() << "\n";
    else
        err << "error: " << e.what() << "\n";
    return kExitError;
}

std::string stem_of(const RunConfig& cfg, const Program& p) {
    if (cfg.input.empty()) return p.name;
    std::string s = fs::path(cfg.input).filename().string();
    for (const char* ext : {".json", ".wcl"})
        if (s.size() > std::strlen(ext) && s.ends_with(ext)) s.resize(s.size() - std::strlen(ext));
    if (s.ends_with(".cfg")) s.resize(s.size() - 4);
    return s;
}

void emit_scripts(const RunConfig& cfg, const ParsedInput& in, const AnalyzeOptions& opts, std::ostream* out) {
    Analysis with = prepare_analysis(in.program, in.costs, opts);
    AnalyzeOptions none = opts;
    none.encoding.cuts = CutMode::None;
    none.refine_portions = false;
    Analysis without = prepare_analysis(in.program, in.costs, none);
    EmitOptions eo;
    eo.get_values = {with.formula.cost_var};
    std::string cut_script = emit_smtlib(with.formula, {}, eo);
    std::string plain_script = emit_smtlib(without.formula, {}, eo);
    if (cfg.emit_smt_dir.empty()) {
        if (out) *out << cut_script;
        return;
    }
    fs::path dir(cfg.emit_smt_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cli", "cannot create '" + dir.string() + "': " + ec.message());
    std::string stem = stem_of(cfg, in.program);
    write_file(dir / (stem + ".cuts.smt2"), cut_script);
    write_file(dir / (stem + ".nocuts.smt2"), plain_script);
}

}  // namespace

ParsedInput load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw Error("cli", "no input file (use --input)");
    std::string text = read_file(cfg.input);
    std::string format = cfg.format;
    if (format == "auto") format = cfg.input.ends_with(".json") ? "cfg" : "minilang";
    ParsedInput in;
    if (format == "cfg") {
        in = parse_cfg_file(text);
    } else if (format == "minilang") {
        in = parse_minilang(text, MinilangOptions{cfg.havoc_unsupported});
        in.program.name = fs::path(cfg.input).stem().string();
    } else {
        throw Error("cli", "unknown format '" + format + "' (auto|minilang|cfg)");
    }
    return in;
}

SolverConfig solver_config(const RunConfig& cfg) {
    SolverConfig s = default_solver_config();
    if (!cfg.solver.empty()) {
        s.command = split_command(cfg.solver);
        s.options.clear();
        if (!s.command.empty() && fs::path(s.command.front()).filename().string().rfind("z3", 0) == 0)
            s.options.push_back("(set-option :tactic.default_tactic smt)");
    }
    if (cfg.timeout_ms <= 0) throw Error("cli", "--timeout-ms must be positive");
    s.timeout_ms = cfg.timeout_ms;
    s.incremental = cfg.incremental;
    return s;
}

AnalyzeOptions analyze_options(const RunConfig& cfg) {
    AnalyzeOptions o;
    o.encoding.cost_encoding = parse_cost_encoding(cfg.encoding);
    o.encoding.cuts = parse_cut_mode(cfg.cuts);
    o.encoding.havoc_unsupported = cfg.havoc_unsupported;
    o.strategy = parse_strategy(cfg.strategy);
    o.refine_portions = cfg.refine_portions;
    o.unroll.default_bound = cfg.default_loop_bound;
    o.omt.solver = solver_config(cfg);
    if (cfg.output != "text" && cfg.output != "json")
        throw Error("cli", "unknown output '" + cfg.output + "' (text|json)");
    return o;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        try {
            auto dots = item.find("..");
            if (dots == std::string::npos) {
                out.push_back(std::stoi(item));
                continue;
            }
            int a = std::stoi(item.substr(0, dots)), b = std::stoi(item.substr(dots + 2));
            if (b < a) throw Error("cli", "empty range '" + item + "'");
            for (int i = a; i <= b; ++i) out.push_back(i);
        } catch (const std::logic_error&) {
            throw Error("cli", "bad number list '" + s + "'");
        }
    }
    return out;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        auto t0 = std::chrono::steady_clock::now();
        AnalyzeOptions opts = analyze_options(cfg);
        if (cfg.verbose)
            opts.omt.on_query = [&err](const QueryTrace& t) {
                char ms[32];
                std::snprintf(ms, sizeof ms, "%.1f", t.elapsed_ms);
                err << "[omt] " << t.target << " >= " << t.m << ": " << to_string(t.verdict) << " (" << ms << " ms)\n";
            };
        ParsedInput in = load_input(cfg);
        if (!cfg.emit_smt_dir.empty()) emit_scripts(cfg, in, opts, nullptr);
        Analysis a = analyze(in.program, in.costs, opts);
        double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        Report r = make_report(a, cfg, wall);
        out << (cfg.output == "json" ? emit_report_json(r) : format_report_text(r));
        switch (a.result.outcome) {
            case Outcome::Exact: return kExitExact;
            case Outcome::UpperBound: return kExitUpperBound;
            case Outcome::Infeasible: return kExitInfeasible;
        }
        return kExitError;
    } catch (const std::exception& e) {
        return report_error(err, e);
    }
}

int cmd_emit_smt(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        AnalyzeOptions opts = analyze_options(cfg);
        ParsedInput in = load_input(cfg);
        emit_scripts(cfg, in, opts, &out);
        return kExitExact;
    } catch (const std::exception& e) {
        return report_error(err, e);
    }
}

int cmd_oracle(const RunConfig& cfg, const OracleArgs& args, std::ostream& out, std::ostream& err) {
    try {
        OracleOptions o{solver_config(cfg), args.path_limit, args.exhaustive};
        ParsedInput in = load_input(cfg);
        Program p = in.program;
        CostModel costs = in.costs;
        if (check_loop_free(p)) {
            UnrollResult u = unroll(p, UnrollOptions{cfg.default_loop_bound});
            costs = u.remap_costs(costs);
            p = std::move(u.program);
        }
        if (cfg.havoc_unsupported) havoc_unsupported(p);
        OracleResult r = oracle_wcet(p, costs, o);
        if (cfg.output == "json") {
            nlohmann::json j;
            j["program"] = p.name;
            j["feasible"] = r.feasible;
            j["wcet"] = r.wcet;
            j["paths"] = r.paths;
            j["queries"] = r.queries;
            j["path"] = nlohmann::json::array();
            for (BlockId b : r.path) j["path"].push_back(p.blocks[b].name);
            j["inputs"] = nlohmann::json::object();
            for (const auto& [k, v] : r.inputs) {
                if (const Int* i = std::get_if<Int>(&v))
                    j["inputs"][k] = *i;
                else
                    j["inputs"][k] = std::get<bool>(v);
            }
            if (args.exhaustive) j["feasible_paths"] = r.feasible_paths;
            out << j.dump(2) << "\n";
        } else {
            out << "program: " << p.name << "\n";
            out << "paths:   " << r.paths << " (" << r.queries << " queried)\n";
            if (!r.feasible) {
                out << "no feasible path\n";
                return kExitInfeasible;
            }
            out << "wcet:    " << r.wcet << "\npath:   ";
            for (BlockId b : r.path) out << " " << p.blocks[b].name;
            out << "\n";
            if (!r.inputs.empty()) {
                out << "inputs: ";
                for (const auto& [k, v] : r.inputs) out << " " << k << "=" << to_string(v);
                out << "\n";
            }
            if (args.exhaustive) out << "feasible paths: " << r.feasible_paths << "\n";
        }
        return r.feasible ? kExitExact : kExitInfeasible;
    } catch (const std::exception& e) {
        return report_error(err, e);
    }
}

int cmd_bench(const RunConfig& cfg, const BenchArgs& args, std::ostream& out, std::ostream& err) {
    try {
        BenchOptions o;
        o.ns = parse_int_list(args.ns);
        std::stringstream ss(args.modes);
        for (std::string m; std::getline(ss, m, ',');)
            if (!m.empty()) o.modes.push_back(parse_bench_mode(m));
        o.kind = parse_bench_kind(args.kind);
        o.shape = parse_diamond_shape(args.shape);
        o.solver = solver_config(cfg);
        o.budget_ms = cfg.timeout_ms;
        o.repeats = args.repeats;
        o.jobs = args.jobs;
        o.refine_portions = cfg.refine_portions;
        auto rows = run_scaling(o);
        out << to_csv(rows);
        return kExitExact;
    } catch (const std::exception& e) {
        return report_error(err, e);
    }
}

int cmd_dump(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        AnalyzeOptions opts = analyze_options(cfg);
        ParsedInput in = load_input(cfg);
        opts.refine_portions = false;
        Analysis a = prepare_analysis(in.program, in.costs, opts);
        out << dump_structure(a.program, immediate_dominators(a.program), a.portions, a.tree);
        return kExitExact;
    } catch (const std::exception& e) {
        return report_error(err, e);
    }
}

int cmd_gen(const RunConfig& cfg, const GenArgs& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.what == "diamond") {
            DiamondShape shape = parse_diamond_shape(args.shape);
            if (shape == DiamondShape::PerTest)
                out << diamond_minilang(args.n);
            else {
                ParsedInput in = gen_diamond(DiamondSpec{args.n, shape});
                out << emit_cfg_file(in.program, in.costs);
            }
        } else if (args.what == "random") {
            ParsedInput in = random_program(cfg.seed);
            out << emit_cfg_file(in.program, in.costs);
        } else {
            throw Error("cli", "unknown generator '" + args.what + "' (diamond|random)");
        }
        return kExitExact;
    } catch (const std::exception& e) {
        return report_error(err, e);
    }
}

}  // namespace wcet
