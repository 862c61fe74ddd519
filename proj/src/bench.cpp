#include "wcet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "wcet/cfgkit.hpp"
#include "wcet/error.hpp"

namespace wcet {

std::string_view to_string(DiamondShape s) { return s == DiamondShape::PerFragment ? "per-fragment" : "per-test"; }

DiamondShape parse_diamond_shape(std::string_view s) {
    if (s == "per-fragment") return DiamondShape::PerFragment;
    if (s == "per-test") return DiamondShape::PerTest;
    throw Error("bench", "unknown diamond shape '" + std::string(s) + "' (per-fragment|per-test)");
}

std::string diamond_minilang(int n) {
    if (n < 1) throw Error("bench", "diamond needs n >= 1, got " + std::to_string(n));
    std::ostringstream os;
    os << "# " << n << " fragments; worst case " << 5 * n << "\n";
    for (int i = 1; i <= n; ++i) {
        os << "b" << i << " = nondet(0, 1);\n";
        os << "if (b" << i << " == 1) { cost 2; } else { cost 3; }\n";
        os << "if (b" << i << " == 1) { cost 3; } else { cost 2; }\n";
    }
    os << "return;\n";
    return os.str();
}

ParsedInput gen_diamond(const DiamondSpec& spec) {
    if (spec.n < 1) throw Error("bench", "diamond needs n >= 1, got " + std::to_string(spec.n));
    if (spec.shape == DiamondShape::PerTest) return parse_minilang(diamond_minilang(spec.n));

    ParsedInput out;
    Program& p = out.program;
    p.name = "diamond" + std::to_string(spec.n);
    const int n = spec.n;
    // Blocks: d_i = 3i, then = 3i+1, else = 3i+2, final exit = 3n.
    for (int i = 0; i < n; ++i) {
        std::string b = "b" + std::to_string(i + 1);
        BlockId d = 3 * i, t = d + 1, e = d + 2, next = d + 3;
        Block dec;
        dec.name = "frag" + std::to_string(i + 1);
        dec.term = Branch{Expr::eq(Expr::var(b), Expr::int_const(1)), t, e};
        Block th, el;
        th.name = dec.name + ".then";
        el.name = dec.name + ".else";
        th.term = Goto{next};
        el.term = Goto{next};
        p.blocks.push_back(std::move(dec));
        p.blocks.push_back(std::move(th));
        p.blocks.push_back(std::move(el));
        p.inputs.push_back(HavocVar{b, Type::Int, 0, 1, d});
        p.types[b] = Type::Int;
        out.costs.edge[{d, t}] = 2;
        out.costs.edge[{t, next}] = 3;
        out.costs.edge[{d, e}] = 3;
        out.costs.edge[{e, next}] = 2;
    }
    Block last;
    last.name = "exit";
    p.blocks.push_back(std::move(last));
    p.entry = 0;
    p.exit = 3 * n;
    p.finalize();
    out.costs.convention = "edge";
    validate_program(p);
    return out;
}

std::size_t count_paths(const Program& p, std::size_t limit) {
    auto topo = topo_order(p);
    std::vector<std::size_t> n(p.num_blocks(), 0);
    n[p.entry] = 1;
    for (BlockId b : topo)
        for (BlockId s : p.successors(b)) n[s] = std::min(limit + 1, n[s] + n[b]);
    return n[p.exit];
}

namespace {

struct PathQuery {
    std::vector<BlockId> blocks;
    Int cost = 0;
};

std::string vname(const std::string& v) { return "v_" + v; }

Expr vren(const Expr& e) { return rename_vars(e, vname); }

std::vector<PathQuery> enumerate_paths(const Program& p, const CostModel& costs, std::size_t limit) {
    std::size_t total = count_paths(p, limit);
    if (total > limit)
        throw Error("bench", "program has more than " + std::to_string(limit) + " paths; the oracle refuses it");
    std::vector<PathQuery> out;
    out.reserve(total);
    std::vector<BlockId> stack{p.entry};
    std::function<void(Int)> walk = [&](Int cost) {
        BlockId b = stack.back();
        cost += costs.block_cost(b);
        if (b == p.exit) {
            out.push_back(PathQuery{stack, cost});
            return;
        }
        for (EdgeId e : p.out_edges(b)) {
            stack.push_back(p.edges()[e].to);
            walk(cost + costs.edge_cost(p, e));
            stack.pop_back();
        }
    };
    walk(0);
    return out;
}

std::string oracle_prefix(const Program& p, const SolverConfig& cfg) {
    std::string s = "(set-option :produce-models true)\n";
    for (const auto& o : cfg.options) s += o + "\n";
    s += "(set-logic QF_LIA)\n";
    std::map<std::string, Type> vars;
    for (const auto& in : p.inputs) vars[in.name] = in.type;
    for (const auto& b : p.blocks) {
        for (const auto& ph : b.phis) vars[ph.target] = *p.type_of_var(ph.target);
        for (const auto& a : b.assigns) vars[a.var] = *p.type_of_var(a.var);
    }
    for (const auto& [v, t] : vars) s += "(declare-fun " + vname(v) + " () " + std::string(to_string(t)) + ")\n";
    return s;
}

// Conjunction describing one path, written straight from the program.
std::vector<std::string> path_assertions(const Program& p, const std::vector<BlockId>& path) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        BlockId b = path[i];
        const Block& blk = p.blocks[b];
        for (const auto& in : p.inputs) {
            if (in.block != b) continue;
            std::string x = vname(in.name);
            if (in.lo) out.push_back("(<= " + std::to_string(*in.lo) + " " + x + ")");
            if (in.hi) out.push_back("(<= " + x + " " + std::to_string(*in.hi) + ")");
        }
        for (const auto& ph : blk.phis) {
            if (i == 0) throw Error("bench", "phi in the entry block");
            auto src = std::find_if(ph.sources.begin(), ph.sources.end(),
                                    [&](const auto& s) { return s.first == path[i - 1]; });
            if (src == ph.sources.end()) throw Error("bench", "phi " + ph.target + " lacks a source on the path");
            out.push_back("(= " + vname(ph.target) + " " + to_sexpr(vren(src->second)) + ")");
        }
        for (const auto& a : blk.assigns) {
            if (!is_linear(a.value)) continue;  // left unconstrained
            out.push_back("(= " + vname(a.var) + " " + to_sexpr(vren(a.value)) + ")");
        }
        for (const auto& as : blk.assumes) out.push_back(to_sexpr(vren(as)));
        if (i + 1 < path.size()) {
            const Edge& e = p.edges()[*p.find_edge(b, path[i + 1])];
            if (!e.guard.is_true()) out.push_back(to_sexpr(vren(e.guard)));
        }
    }
    if (out.empty()) out.push_back("true");
    return out;
}

std::vector<std::string> input_names(const Program& p) {
    std::vector<std::string> out;
    for (const auto& in : p.inputs) out.push_back(vname(in.name));
    return out;
}

std::vector<PathQuery> prepare(const Program& p, const CostModel& costs, const OracleOptions& opts) {
    if (check_loop_free(p)) throw Error("bench", "the oracle needs a loop-free program");
    costs.check_total(p);
    auto paths = enumerate_paths(p, costs, opts.path_limit);
    std::stable_sort(paths.begin(), paths.end(), [](const PathQuery& a, const PathQuery& b) { return a.cost > b.cost; });
    return paths;
}

void record(OracleResult& r, const Program& p, const PathQuery& q, const Model& m) {
    r.feasible = true;
    r.wcet = q.cost;
    r.path = q.blocks;
    r.inputs.clear();
    for (const auto& in : p.inputs) {
        auto it = m.find(vname(in.name));
        if (it != m.end()) r.inputs[in.name] = it->second;
    }
}

std::string indecision(const PathQuery& q, const Program& p, const Verdict& v) {
    std::string s = "oracle inapplicable: solver said " + std::string(to_string(v.kind)) + " on path";
    for (BlockId b : q.blocks) s += " " + p.blocks[b].name;
    if (!v.reason.empty()) s += " (" + v.reason + ")";
    return s;
}

}  // namespace

OracleResult oracle_wcet_serial(const Program& p, const CostModel& costs, const OracleOptions& opts) {
    auto paths = prepare(p, costs, opts);
    OracleResult r;
    r.paths = paths.size();
    SolverSession session(opts.solver, oracle_prefix(p, opts.solver));
    auto values = input_names(p);
    for (const auto& q : paths) {
        Verdict v = session.query(path_assertions(p, q.blocks), values);
        ++r.queries;
        if (v.kind == Verdict::Unsat) continue;
        if (v.kind != Verdict::Sat) throw Error("bench", indecision(q, p, v));
        ++r.feasible_paths;
        if (!r.feasible) record(r, p, q, v.model);
        if (!opts.exhaustive) break;
    }
    return r;
}

OracleResult oracle_wcet(const Program& p, const CostModel& costs, const OracleOptions& opts) {
    auto paths = prepare(p, costs, opts);
    const long n = static_cast<long>(paths.size());
    std::vector<int> status(paths.size(), 0);  // 1 sat, 2 unsat, 3 indecisive, 0 not asked
    std::vector<Verdict> verdicts(paths.size());
    std::atomic<long> best{n};
    std::atomic<long> asked{0};
    std::exception_ptr error;
    auto values = input_names(p);
    const std::string prefix = oracle_prefix(p, opts.solver);
#pragma omp parallel
    {
        SolverSession session(opts.solver, prefix);
#pragma omp for schedule(dynamic, 1)
        for (long i = 0; i < n; ++i) {
            if (!opts.exhaustive && i > best.load()) continue;
            try {
                Verdict v = session.query(path_assertions(p, paths[i].blocks), values);
                asked.fetch_add(1);
                status[i] = v.kind == Verdict::Sat ? 1 : v.kind == Verdict::Unsat ? 2 : 3;
                if (status[i] == 1) {
                    long cur = best.load();
                    while (i < cur && !best.compare_exchange_weak(cur, i)) {
                    }
                }
                verdicts[i] = std::move(v);
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
    OracleResult r;
    r.paths = paths.size();
    r.queries = static_cast<std::size_t>(asked.load());
    long b = best.load();
    for (long i = 0; i < n; ++i) {
        if (status[i] == 3 && (opts.exhaustive || i < b)) throw Error("bench", indecision(paths[i], p, verdicts[i]));
        if (status[i] == 1) ++r.feasible_paths;
    }
    if (!opts.exhaustive) r.feasible_paths = b < n ? 1 : 0;
    if (b < n) record(r, p, paths[b], verdicts[b].model);
    return r;
}

std::string random_minilang(std::uint64_t seed, const RandomProgramOptions& opts) {
    std::mt19937_64 rng(seed);
    auto uni = [&](Int lo, Int hi) { return std::uniform_int_distribution<Int>(lo, hi)(rng); };
    auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };

    const int k = static_cast<int>(uni(1, std::max(1, opts.max_inputs)));
    std::vector<std::string> inputs;
    for (int i = 0; i < k; ++i) inputs.push_back(std::string(1, static_cast<char>('a' + i)));
    const std::vector<std::string> locals{"x", "y"};
    std::vector<std::string> all = inputs;
    all.insert(all.end(), locals.begin(), locals.end());
    auto pick = [&](const std::vector<std::string>& v) { return v[static_cast<std::size_t>(uni(0, v.size() - 1))]; };
    const Int R = opts.input_range;

    auto linear = [&]() {
        std::string a = pick(all);
        switch (uni(0, 3)) {
            case 0: return a;
            case 1: return a + " + " + pick(all);
            case 2: return a + " - " + pick(all);
            default: return std::to_string(uni(2, 3)) + " * " + a;
        }
    };
    auto condition = [&]() {
        static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
        return linear() + " " + ops[uni(0, 5)] + " " + std::to_string(uni(-R, R));
    };

    std::ostringstream os;
    os << "# random program, seed " << seed << "\n";
    for (const auto& in : inputs) os << "int " << in << " = nondet(" << -R << ", " << R << ");\n";
    os << "int x = " << pick(inputs) << ";\n";
    os << "int y = " << uni(-R, R) << ";\n";

    int blocks_left = opts.max_blocks - 1;  // entry
    int decisions_left = opts.max_decisions;
    std::function<void(int, const std::string&)> body = [&](int depth, const std::string& ind) {
        int stmts = static_cast<int>(uni(1, 3));
        for (int s = 0; s < stmts; ++s) {
            bool want_if = decisions_left > 0 && blocks_left >= 2 && depth < 3 && chance(depth == 0 ? 0.75 : 0.4);
            if (!want_if) {
                if (chance(0.05))
                    os << ind << "assume(" << condition() << ");\n";
                else
                    os << ind << pick(locals) << " = " << linear() << (chance(0.5) ? " + " + std::to_string(uni(-5, 5)) : "")
                       << ";\n";
                continue;
            }
            bool with_else = blocks_left >= 3 && chance(0.6);
            blocks_left -= with_else ? 3 : 2;
            --decisions_left;
            os << ind << "if (" << condition() << ") {\n";
            body(depth + 1, ind + "  ");
            if (with_else) {
                os << ind << "} else {\n";
                body(depth + 1, ind + "  ");
            }
            os << ind << "}\n";
        }
    };
    body(0, "");
    os << "return;\n";
    return os.str();
}

ParsedInput random_program(std::uint64_t seed, const RandomProgramOptions& opts) {
    ParsedInput in = parse_minilang(random_minilang(seed, opts));
    if (static_cast<int>(in.program.num_blocks()) > opts.max_blocks)
        throw Error("bench", "random program exceeds the block budget");
    in.program.name = "random" + std::to_string(seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<Int> cost(0, opts.max_cost);
    in.costs = CostModel{};
    in.costs.convention = "edge";
    for (const Edge& e : in.program.edges()) in.costs.edge[{e.from, e.to}] = cost(rng);
    return in;
}

std::string_view to_string(BenchMode m) {
    switch (m) {
        case BenchMode::NoCuts: return "no-cuts";
        case BenchMode::LeafCuts: return "leaf-cuts";
        case BenchMode::Hierarchical: return "hierarchical";
        case BenchMode::CutOrdered: return "cut-ordered";
    }
    return "?";
}

BenchMode parse_bench_mode(std::string_view s) {
    for (auto m : {BenchMode::NoCuts, BenchMode::LeafCuts, BenchMode::Hierarchical, BenchMode::CutOrdered})
        if (s == to_string(m)) return m;
    throw Error("bench", "unknown mode '" + std::string(s) + "' (no-cuts|leaf-cuts|hierarchical|cut-ordered)");
}

std::string_view to_string(BenchKind k) { return k == BenchKind::Maximize ? "maximize" : "unsat-check"; }

BenchKind parse_bench_kind(std::string_view s) {
    if (s == "maximize") return BenchKind::Maximize;
    if (s == "unsat-check") return BenchKind::UnsatCheck;
    throw Error("bench", "unknown bench kind '" + std::string(s) + "' (maximize|unsat-check)");
}

namespace {

AnalyzeOptions options_for(BenchMode mode, const BenchOptions& opts) {
    AnalyzeOptions a;
    a.encoding.cuts = mode == BenchMode::NoCuts     ? CutMode::None
                      : mode == BenchMode::LeafCuts ? CutMode::Leaves
                                                    : CutMode::Hierarchical;
    a.strategy = mode == BenchMode::CutOrdered ? Strategy::CutOrdered : Strategy::Binary;
    a.refine_portions = opts.refine_portions && mode != BenchMode::NoCuts;
    a.omt.solver = opts.solver;
    a.omt.solver.timeout_ms = opts.budget_ms;
    return a;
}

std::string_view last_indecision(const SearchState& st) {
    for (auto it = st.trace.rbegin(); it != st.trace.rend(); ++it)
        if (it->verdict != Verdict::Sat && it->verdict != Verdict::Unsat) return to_string(it->verdict);
    return "upper-bound";
}

}  // namespace

BenchRow run_one(int n, BenchMode mode, const BenchOptions& opts) {
    BenchRow row;
    row.instance = "diamond" + std::to_string(n) + "-" + std::string(to_string(opts.shape)) + "/" +
                   std::string(to_string(opts.kind));
    row.mode = mode;
    row.n = n;
    auto t0 = std::chrono::steady_clock::now();
    try {
        ParsedInput in = gen_diamond(DiamondSpec{n, opts.shape});
        AnalyzeOptions ao = options_for(mode, opts);
        if (opts.kind == BenchKind::Maximize) {
            Analysis a = analyze(in.program, in.costs, ao);
            row.queries = a.result.stats.queries;
            if (a.result.outcome == Outcome::Exact) {
                row.wcet = a.result.wcet;
                row.verdict = "exact";
            } else if (a.result.outcome == Outcome::Infeasible) {
                row.verdict = "infeasible";
            } else {
                row.verdict = std::string(last_indecision(a.result.stats));
            }
        } else {
            Analysis a = prepare_analysis(in.program, in.costs, ao);
            Querier q(a.formula, ao.omt);
            Int m = 5 * static_cast<Int>(n) + 1;
            Verdict v = q.ask(Expr::ge(Expr::var(a.formula.cost_var), Expr::int_const(m)), a.formula.cost_var, m);
            row.queries = 1;
            row.verdict = std::string(to_string(v.kind));
        }
    } catch (const std::exception& e) {
        row.verdict = std::string("error: ") + e.what();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

std::vector<BenchRow> run_scaling(const BenchOptions& opts) {
    std::vector<std::pair<int, BenchMode>> cells;
    for (int n : opts.ns)
        for (BenchMode m : opts.modes) cells.emplace_back(n, m);
    std::vector<BenchRow> rows(cells.size());
    const long count = static_cast<long>(cells.size());
    const int repeats = std::max(1, opts.repeats);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opts.jobs))
    for (long i = 0; i < count; ++i) {
        std::vector<BenchRow> runs;
        for (int r = 0; r < repeats; ++r) runs.push_back(run_one(cells[i].first, cells[i].second, opts));
        std::sort(runs.begin(), runs.end(), [](const BenchRow& a, const BenchRow& b) { return a.wall_ms < b.wall_ms; });
        rows[i] = runs[runs.size() / 2];
    }
    return rows;
}

std::string to_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "instance,mode,n,wcet,queries,wall_ms,verdict\n";
    for (const auto& r : rows) {
        std::string verdict = r.verdict;
        if (verdict.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : verdict) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
            verdict = q + "\"";
        }
        os << r.instance << ',' << to_string(r.mode) << ',' << r.n << ',' << (r.wcet ? std::to_string(*r.wcet) : "")
           << ',' << r.queries << ',' << std::fixed;
        os.precision(1);
        os << r.wall_ms << ',' << verdict << '\n';
    }
    return os.str();
}

}  // namespace wcet
