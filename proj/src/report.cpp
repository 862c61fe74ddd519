#include "wcet/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

#include "wcet/error.hpp"

namespace wcet {

using json = nlohmann::json;

Report make_report(const Analysis& a, const RunConfig& cfg, double wall_ms) {
    const OptimizationResult& r = a.result;
    Report rep;
    rep.program = a.program.name;
    rep.syntactic_bound = r.syntactic_bound;
    rep.wcet = r.wcet;
    rep.diff = r.syntactic_bound > 0 ? static_cast<double>(r.syntactic_bound - r.wcet) / r.syntactic_bound : 0.0;
    rep.sound = r.sound;
    rep.outcome = std::string(to_string(r.outcome));
    if (r.witness) {
        ReportWitness w;
        for (BlockId b : r.witness->blocks) w.blocks.push_back(a.program.blocks[b].name);
        for (EdgeId e : r.witness->edges) {
            const Edge& ed = a.program.edges()[e];
            w.edges.push_back(edge_var(ed.from, ed.to));
        }
        w.inputs = r.witness->inputs;
        w.cost = r.witness->cost;
        rep.witness = std::move(w);
    }
    rep.cuts = a.formula.cuts.size();
    rep.queries = r.stats.queries;
    rep.wall_ms = wall_ms;
    rep.per_cut_bounds = r.per_cut_bounds;
    rep.config = cfg;
    return rep;
}

namespace {

json value_json(const Value& v) {
    if (const Int* i = std::get_if<Int>(&v)) return *i;
    return std::get<bool>(v);
}

Value json_value(const json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<Int>();
    throw Error("cli", "report: input value must be an integer or a Boolean");
}

json config_json(const RunConfig& c) {
    json j = {{"input", c.input},
              {"format", c.format},
              {"encoding", c.encoding},
              {"cuts", c.cuts},
              {"strategy", c.strategy},
              {"refine_portions", c.refine_portions},
              {"solver", c.solver},
              {"timeout_ms", c.timeout_ms},
              {"incremental", c.incremental},
              {"havoc_unsupported", c.havoc_unsupported}};
    if (c.default_loop_bound) j["default_loop_bound"] = *c.default_loop_bound;
    return j;
}

RunConfig json_config(const json& j) {
    RunConfig c;
    c.input = j.at("input").get<std::string>();
    c.format = j.at("format").get<std::string>();
    c.encoding = j.at("encoding").get<std::string>();
    c.cuts = j.at("cuts").get<std::string>();
    c.strategy = j.at("strategy").get<std::string>();
    c.refine_portions = j.at("refine_portions").get<bool>();
    c.solver = j.at("solver").get<std::string>();
    c.timeout_ms = j.at("timeout_ms").get<int>();
    c.incremental = j.value("incremental", false);
    c.havoc_unsupported = j.value("havoc_unsupported", false);
    if (j.contains("default_loop_bound")) c.default_loop_bound = j.at("default_loop_bound").get<Int>();
    c.output = "json";
    return c;
}

}  // namespace

std::string emit_report_json(const Report& r) {
    json j;
    j["program"] = r.program;
    j["syntactic_bound"] = r.syntactic_bound;
    j["wcet"] = r.wcet;
    j["diff"] = r.diff;
    j["sound"] = r.sound;
    j["outcome"] = r.outcome;
    if (r.witness) {
        json in = json::object();
        for (const auto& [k, v] : r.witness->inputs) in[k] = value_json(v);
        j["witness"] = {{"blocks", r.witness->blocks}, {"edges", r.witness->edges}, {"inputs", in}, {"cost", r.witness->cost}};
    } else {
        j["witness"] = nullptr;
    }
    j["cuts"] = r.cuts;
    j["queries"] = r.queries;
    j["wall_ms"] = r.wall_ms;
    json cuts = json::array();
    for (const auto& c : r.per_cut_bounds)
        cuts.push_back({{"portion", c.portion_id}, {"label", c.label}, {"bound", c.bound}, {"optimized", c.optimized}});
    j["per_cut_bounds"] = cuts;
    j["config"] = config_json(r.config);
    return j.dump(2) + "\n";
}

Report parse_report_json(const std::string& text) {
    Report r;
    try {
        json j = json::parse(text);
        r.program = j.at("program").get<std::string>();
        r.syntactic_bound = j.at("syntactic_bound").get<Int>();
        r.wcet = j.at("wcet").get<Int>();
        r.diff = j.at("diff").get<double>();
        r.sound = j.at("sound").get<bool>();
        r.outcome = j.at("outcome").get<std::string>();
        const json& w = j.at("witness");
        if (!w.is_null()) {
            ReportWitness rw;
            rw.blocks = w.at("blocks").get<std::vector<std::string>>();
            rw.edges = w.at("edges").get<std::vector<std::string>>();
            for (const auto& [k, v] : w.at("inputs").items()) rw.inputs[k] = json_value(v);
            rw.cost = w.at("cost").get<Int>();
            r.witness = std::move(rw);
        }
        r.cuts = j.at("cuts").get<std::size_t>();
        r.queries = j.at("queries").get<int>();
        r.wall_ms = j.at("wall_ms").get<double>();
        for (const auto& c : j.at("per_cut_bounds"))
            r.per_cut_bounds.push_back(CutBound{c.at("portion").get<std::size_t>(), c.at("label").get<std::string>(),
                                                c.at("bound").get<Int>(), c.at("optimized").get<bool>()});
        r.config = json_config(j.at("config"));
    } catch (const json::exception& e) {
        throw Error("cli", std::string("malformed report: ") + e.what());
    }
    return r;
}

std::string format_report_text(const Report& r) {
    std::ostringstream os;
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * r.diff);
    os << "program:         " << r.program << "\n";
    os << "syntactic bound: " << r.syntactic_bound << "\n";
    if (r.outcome == "infeasible") {
        os << "wcet:            none (no feasible execution)\n";
    } else {
        os << "wcet:            " << r.wcet << (r.sound ? " (exact)" : " (upper bound; solver undecided)") << "\n";
        os << "diff:            " << pct << "\n";
    }
    os << "cuts:            " << r.cuts << "\n";
    os << "queries:         " << r.queries << "\n";
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.1f", r.wall_ms);
    os << "wall time:       " << ms << " ms\n";
    if (r.witness) {
        os << (r.sound ? "worst-case path: " : "longest path seen: ");
        for (std::size_t i = 0; i < r.witness->blocks.size(); ++i) os << (i ? " -> " : "") << r.witness->blocks[i];
        os << " (cost " << r.witness->cost << ")\n";
        if (!r.witness->inputs.empty()) {
            os << "inputs:         ";
            for (const auto& [k, v] : r.witness->inputs) os << " " << k << "=" << to_string(v);
            os << "\n";
        }
    }
    if (!r.per_cut_bounds.empty()) {
        os << "cut bounds:\n";
        for (const auto& c : r.per_cut_bounds)
            os << "  " << c.label << " <= " << c.bound << (c.optimized ? " (optimized)" : "") << "\n";
    }
    return os.str();
}

}  // namespace wcet
