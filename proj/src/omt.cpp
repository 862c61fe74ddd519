#include "wcet/omt.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <numeric>
#include <set>

#include "wcet/error.hpp"

namespace wcet {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Exact: return "exact";
        case Outcome::UpperBound: return "upper-bound";
        case Outcome::Infeasible: return "infeasible";
    }
    return "?";
}

std::string_view to_string(Strategy s) { return s == Strategy::Binary ? "binary" : "cut-ordered"; }

Strategy parse_strategy(std::string_view s) {
    if (s == "binary") return Strategy::Binary;
    if (s == "cut-ordered") return Strategy::CutOrdered;
    throw Error("omt", "unknown strategy '" + std::string(s) + "' (binary|cut-ordered)");
}

Querier::Querier(const Formula& f, OmtOptions opts) : f_(f), opts_(std::move(opts)), values_(decl_names(f_)) {
    if (opts_.solver.incremental)
        session_ = std::make_unique<SolverSession>(opts_.solver, emit_prefix(f_, {opts_.solver.options, {}, false, true}));
}

Querier::~Querier() = default;

void Querier::tighten_cut(std::size_t index, Int bound) {
    Cut& c = f_.cuts.at(index);
    if (bound >= c.bound) return;
    c.bound = bound;
    if (session_) {
        std::string var = c.whole_program ? f_.cost_var : c.var;
        session_->add_permanent("(<= " + var + " " + std::to_string(bound) + ")");
    }
}

void Querier::validate(const Model& m, const Expr& query) const {
    auto holds = [&](const Expr& e) {
        try {
            Value v = eval_in_model(m, e);
            const bool* b = std::get_if<bool>(&v);
            return b && *b;
        } catch (const Error&) {
            return false;
        }
    };
    for (const auto& e : f_.all_assertions())
        if (!holds(e)) throw Error("omt", "model fails validation on " + to_sexpr(e));
    if (!holds(query)) throw Error("omt", "model fails validation on query " + to_sexpr(query));
}

Verdict Querier::ask(const Expr& query, const std::string& target, Int m) {
    ++queries_;
    Verdict v;
    if (session_) {
        v = session_->query({to_sexpr(query)}, values_);
    } else {
        EmitOptions eo{opts_.solver.options, values_, true, true};
        v = check(emit_smtlib(f_, {query}, eo), opts_.solver);
    }
    if (opts_.on_query) opts_.on_query(QueryTrace{target, m, v.kind, v.elapsed_ms});
    if (v.kind == Verdict::SolverError) throw Error("solve", v.reason);
    if (v.kind == Verdict::Sat && opts_.validate_models) validate(v.model, query);
    return v;
}

namespace {

using Clock = std::chrono::steady_clock;

Int int_of(const Model& m, const std::string& var) {
    auto it = m.find(var);
    if (it == m.end()) throw Error("omt", "model has no value for " + var);
    const Int* i = std::get_if<Int>(&it->second);
    if (!i) throw Error("omt", var + " is not an integer in the model");
    return *i;
}

void merge_stats(SearchState& into, const SearchState& s) {
    into.queries += s.queries;
    into.elapsed_ms += s.elapsed_ms;
    into.trace.insert(into.trace.end(), s.trace.begin(), s.trace.end());
}

}  // namespace

SearchState search_max(Querier& q, const std::string& var, Int hi, const Model* seed) {
    auto t0 = Clock::now();
    SearchState st;
    st.hi = hi;
    if (seed) {
        st.lo = int_of(*seed, var);
        st.best_model = *seed;
    }
    if (st.lo > st.hi) throw Error("omt", var + " = " + std::to_string(st.lo) + " exceeds its bound " + std::to_string(hi));
    bool decisive = true;
    while (st.lo < st.hi) {
        Int m = st.lo + (st.hi - st.lo + 1) / 2;
        Verdict v = q.ask(Expr::ge(Expr::var(var), Expr::int_const(m)), var, m);
        ++st.queries;
        st.trace.push_back(QueryTrace{var, m, v.kind, v.elapsed_ms});
        if (v.kind == Verdict::Sat) {
            Int got = int_of(v.model, var);
            if (got > st.hi)
                throw Error("omt", var + " = " + std::to_string(got) + " exceeds proven bound " + std::to_string(st.hi));
            st.lo = got;
            st.best_model = std::move(v.model);
        } else if (v.kind == Verdict::Unsat) {
            st.hi = m - 1;
        } else {
            decisive = false;
            break;
        }
    }
    if (decisive && st.best_model) st.hi = st.lo;
    st.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return st;
}

namespace {

// Feasibility check: any model at all. Returns false when the run is over.
bool feasibility(Querier& q, Int init_hi, OptimizationResult& r, Model& model) {
    auto t0 = Clock::now();
    const std::string& cost = q.formula().cost_var;
    Verdict v = q.ask(Expr::ge(Expr::var(cost), Expr::int_const(0)), cost, 0);
    r.stats.queries += 1;
    r.stats.trace.push_back(QueryTrace{cost, 0, v.kind, v.elapsed_ms});
    r.stats.elapsed_ms += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    r.stats.hi = init_hi;
    if (v.kind == Verdict::Unsat) {
        r.outcome = Outcome::Infeasible;
        r.wcet = 0;
        r.stats.hi = 0;
        return false;
    }
    if (v.kind != Verdict::Sat) {
        r.outcome = Outcome::UpperBound;
        r.sound = false;
        r.wcet = init_hi;
        return false;
    }
    model = std::move(v.model);
    return true;
}

void finish(OptimizationResult& r, const SearchState& st) {
    r.stats.lo = st.lo;
    r.stats.hi = st.hi;
    r.stats.best_model = st.best_model;
    r.wcet = st.hi;
    r.sound = st.lo == st.hi;
    r.outcome = r.sound ? Outcome::Exact : Outcome::UpperBound;
}

std::vector<CutBound> cut_bounds(const Formula& f, const std::set<std::size_t>& optimized) {
    std::vector<CutBound> out;
    for (std::size_t i = 0; i < f.cuts.size(); ++i) {
        const Cut& c = f.cuts[i];
        out.push_back(CutBound{c.portion_id, c.label, c.bound, optimized.count(i) > 0});
    }
    return out;
}

}  // namespace

OptimizationResult maximize_binary_search(const Formula& f, Int init_hi, const OmtOptions& opts) {
    OptimizationResult r;
    r.syntactic_bound = init_hi;
    Querier q(f, opts);
    Model model;
    if (feasibility(q, init_hi, r, model)) {
        SearchState st = search_max(q, f.cost_var, init_hi, &model);
        merge_stats(r.stats, st);
        finish(r, st);
    }
    r.per_cut_bounds = cut_bounds(q.formula(), {});
    return r;
}

OptimizationResult maximize_cut_ordered(const Formula& f, Int init_hi, const OmtOptions& opts) {
    OptimizationResult r;
    r.syntactic_bound = init_hi;
    Querier q(f, opts);
    Model model;
    std::set<std::size_t> optimized;
    if (feasibility(q, init_hi, r, model)) {
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < f.cuts.size(); ++i)
            if (!f.cuts[i].whole_program) order.push_back(i);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const Cut &x = f.cuts[a], &y = f.cuts[b];
            return std::pair(x.size, x.header_pos) < std::pair(y.size, y.header_pos);
        });
        Int hi = init_hi;
        for (std::size_t i : order) {
            const Cut& c = q.formula().cuts[i];
            SearchState st = search_max(q, c.var, c.bound, &model);
            merge_stats(r.stats, st);
            if (st.lo != st.hi) continue;  // indecisive: the syntactic bound stays
            q.tighten_cut(i, st.hi);
            optimized.insert(i);
        }
        for (std::size_t i = 0; i < f.cuts.size(); ++i)
            if (f.cuts[i].whole_program) hi = std::min(hi, q.formula().cuts[i].bound);
        SearchState st = search_max(q, f.cost_var, hi, &model);
        merge_stats(r.stats, st);
        finish(r, st);
    }
    r.per_cut_bounds = cut_bounds(q.formula(), optimized);
    return r;
}

WitnessPath extract_witness(const Formula& f, const Model& m, const Program& p, const CostModel& costs) {
    auto truth = [&](const std::string& v) {
        auto it = m.find(v);
        if (it == m.end()) throw Error("omt", "model has no value for " + v);
        const bool* b = std::get_if<bool>(&it->second);
        if (!b) throw Error("omt", v + " is not a Boolean in the model");
        return *b;
    };
    WitnessPath w;
    if (!truth(block_var(p.entry))) throw Error("omt", "witness does not execute the entry block");
    std::vector<bool> on_path(p.num_blocks(), false);
    BlockId b = p.entry;
    for (;;) {
        if (on_path[b]) throw Error("omt", "witness revisits block " + p.blocks[b].name);
        on_path[b] = true;
        w.blocks.push_back(b);
        w.cost += costs.block_cost(b);
        std::optional<EdgeId> next;
        for (EdgeId e : p.out_edges(b)) {
            const Edge& ed = p.edges()[e];
            if (!truth(edge_var(ed.from, ed.to))) continue;
            if (next)
                throw Error("omt", "witness takes two edges out of " + p.blocks[b].name);
            next = e;
        }
        if (!next) break;
        const Edge& ed = p.edges()[*next];
        w.edges.push_back(*next);
        w.cost += costs.edge_cost(p, *next);
        b = ed.to;
    }
    if (b != p.exit) throw Error("omt", "witness path stops at " + p.blocks[b].name + " before the exit");
    for (BlockId x = 0; x < p.num_blocks(); ++x)
        if (truth(block_var(x)) != on_path[x])
            throw Error("omt", "block " + p.blocks[x].name + " is marked executed off the witness path");
    Int reported = int_of(m, f.cost_var);
    if (reported != w.cost)
        throw Error("omt", "witness path costs " + std::to_string(w.cost) + " but the model reports " +
                               std::to_string(reported));
    for (const auto& in : p.inputs) {
        auto it = m.find(ssa_var(in.name));
        if (it != m.end()) w.inputs[in.name] = it->second;
    }
    return w;
}

SubProgram extract_portion(const Program& p, const CostModel& costs, const Portion& portion) {
    if (portion.whole_program || !portion.contiguous)
        throw Error("omt", "portion " + portion.label(p) + " is not a closed region");
    SubProgram sp;
    std::vector<BlockId> members{portion.header};
    for (BlockId b : portion.blocks)
        if (b != portion.header) members.push_back(b);
    std::sort(members.begin(), members.end());
    std::vector<int> map(p.num_blocks(), -1);
    for (std::size_t i = 0; i < members.size(); ++i) map[members[i]] = static_cast<int>(i);
    auto to = [&](BlockId b) {
        if (map[b] < 0) throw Error("omt", "portion " + portion.label(p) + " is not closed at " + p.blocks[b].name);
        return static_cast<BlockId>(map[b]);
    };

    Program& q = sp.program;
    q.name = p.name + "/" + portion.label(p);
    q.types = p.types;
    q.entry = to(portion.header);
    q.exit = to(portion.merge);
    std::set<std::string> defined, used;
    auto use = [&](const Expr& e) {
        for (const auto& v : vars_of(e)) used.insert(v);
    };
    for (BlockId b : members) {
        Block blk = p.blocks[b];
        if (b == portion.header) {
            for (const auto& ph : blk.phis) used.insert(ph.target);  // header phis become havocs
            blk.phis.clear();
        }
        for (auto& ph : blk.phis) {
            defined.insert(ph.target);
            for (auto& [src, v] : ph.sources) {
                src = to(src);
                use(v);
            }
        }
        for (const auto& a : blk.assigns) {
            defined.insert(a.var);
            use(a.value);
        }
        for (const auto& a : blk.assumes) use(a);
        if (b == portion.merge) {
            blk.term = Return{};
        } else if (auto* br = std::get_if<Branch>(&blk.term)) {
            use(br->cond);
            br->then_target = to(br->then_target);
            br->else_target = to(br->else_target);
        } else if (auto* g = std::get_if<Goto>(&blk.term)) {
            g->target = to(g->target);
        } else {
            throw Error("omt", "portion " + portion.label(p) + " returns before its merge");
        }
        q.blocks.push_back(std::move(blk));
        sp.origin.push_back(b);
    }
    for (const auto& in : p.inputs)
        if (map[in.block] >= 0) {
            HavocVar h = in;
            h.block = to(in.block);
            q.inputs.push_back(h);
            defined.insert(in.name);
        }
    // Values from outside the region. Program inputs keep their ranges.
    for (const auto& v : used) {
        if (defined.count(v)) continue;
        HavocVar h;
        h.name = v;
        h.block = q.entry;
        if (const HavocVar* in = p.find_input(v)) {
            h.type = in->type;
            h.lo = in->lo;
            h.hi = in->hi;
        } else {
            auto t = p.type_of_var(v);
            if (!t) throw Error("omt", "variable '" + v + "' has no type");
            h.type = *t;
        }
        q.inputs.push_back(h);
    }
    q.finalize();

    sp.costs.convention = costs.convention;
    for (const Edge& e : q.edges())
        sp.costs.edge[{e.from, e.to}] = costs.edge_cost(p, *p.find_edge(sp.origin[e.from], sp.origin[e.to]));
    for (BlockId b = 0; b < q.num_blocks(); ++b)
        if (b != q.entry && costs.block_cost(sp.origin[b])) sp.costs.block[b] = costs.block_cost(sp.origin[b]);
    return sp;
}

namespace {

bool refinable(const Portion& x) { return x.contiguous && !x.whole_program; }

bool strictly_inside(const Portion& inner, const Portion& outer) {
    return !inner.whole_program && inner.edges.size() < outer.edges.size() &&
           std::includes(outer.edges.begin(), outer.edges.end(), inner.edges.begin(), inner.edges.end());
}

}  // namespace

Int refine_portion_bound(const Program& p, const Portion& portion, const CostModel& costs, const OmtOptions& opts,
                         const std::vector<Portion>& known) {
    Int syntactic = syntactic_bound(p, costs, portion);
    SubProgram sp = extract_portion(p, costs, portion);
    const Program& q = sp.program;
    std::vector<int> to(p.num_blocks(), -1);
    for (std::size_t i = 0; i < sp.origin.size(); ++i) to[sp.origin[i]] = static_cast<int>(i);

    // Bounds already known for portions inside this one carry over as cuts.
    std::vector<Portion> cuts;
    std::set<std::vector<EdgeId>> seen;
    for (const Portion& k : known) {
        if (!strictly_inside(k, portion) || !seen.insert(k.edges).second) continue;
        Portion c = k;
        c.header = static_cast<BlockId>(to[k.header]);
        c.merge = static_cast<BlockId>(to[k.merge]);
        c.edges.clear();
        c.blocks.clear();
        for (EdgeId e : k.edges) {
            const Edge& ed = p.edges()[e];
            c.edges.push_back(*q.find_edge(static_cast<BlockId>(to[ed.from]), static_cast<BlockId>(to[ed.to])));
        }
        for (BlockId b : k.blocks) c.blocks.push_back(static_cast<BlockId>(to[b]));
        std::sort(c.edges.begin(), c.edges.end());
        std::sort(c.blocks.begin(), c.blocks.end());
        cuts.push_back(std::move(c));
    }
    Int init = std::min(syntactic, syntactic_bound(q, sp.costs));
    Formula f = encode_semantics(q);
    encode_cost_sum(f, q, sp.costs);
    if (!cuts.empty()) {
        Portion whole = whole_program_portion(q);
        whole.id = portion.id;
        whole.bound = init;
        cuts.push_back(std::move(whole));
        encode_cuts(f, q, sp.costs, cuts);
    }
    OptimizationResult r = maximize_binary_search(f, init, opts);
    if (r.outcome == Outcome::Infeasible) return 0;
    return std::min(r.wcet, syntactic);
}

namespace {

// Waves of portions: each one comes after every portion nested in it.
std::vector<std::vector<std::size_t>> refinement_waves(const std::vector<Portion>& portions) {
    std::vector<std::size_t> order(portions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return portions[a].edges.size() < portions[b].edges.size(); });
    std::vector<int> depth(portions.size(), -1);
    std::vector<std::vector<std::size_t>> waves;
    for (std::size_t i : order) {
        if (!refinable(portions[i])) continue;
        int d = 0;
        for (std::size_t j : order)
            if (depth[j] >= 0 && strictly_inside(portions[j], portions[i])) d = std::max(d, depth[j] + 1);
        depth[i] = d;
        if (waves.size() <= static_cast<std::size_t>(d)) waves.resize(d + 1);
        waves[d].push_back(i);
    }
    return waves;
}

}  // namespace

void refine_bounds_serial(std::vector<Portion>& portions, const Program& p, const CostModel& costs,
                          const OmtOptions& opts) {
    for (const auto& wave : refinement_waves(portions)) {
        std::vector<Int> refined;
        for (std::size_t i : wave) refined.push_back(refine_portion_bound(p, portions[i], costs, opts, portions));
        for (std::size_t k = 0; k < wave.size(); ++k)
            portions[wave[k]].bound = std::min(portions[wave[k]].bound, refined[k]);
    }
}

void refine_bounds(std::vector<Portion>& portions, const Program& p, const CostModel& costs, const OmtOptions& opts) {
    OmtOptions quiet = opts;
    quiet.on_query = nullptr;  // callbacks are not required to be thread-safe
    for (const auto& wave : refinement_waves(portions)) {
        const long n = static_cast<long>(wave.size());
        std::vector<Int> refined(wave.size());
        std::vector<std::exception_ptr> errors(wave.size());
#pragma omp parallel for schedule(dynamic)
        for (long k = 0; k < n; ++k) {
            try {
                refined[k] = refine_portion_bound(p, portions[wave[k]], costs, quiet, portions);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
        for (long k = 0; k < n; ++k) {
            if (errors[k]) std::rethrow_exception(errors[k]);
            portions[wave[k]].bound = std::min(portions[wave[k]].bound, refined[k]);
        }
    }
}

Analysis prepare_analysis(const Program& input, const CostModel& input_costs, const AnalyzeOptions& opts) {
    Analysis a;
    if (check_loop_free(input)) {
        UnrollResult u = unroll(input, opts.unroll);
        a.costs = u.remap_costs(input_costs);
        a.program = std::move(u.program);
    } else {
        a.program = input;
        a.costs = input_costs;
    }
    const Program& p = a.program;
    a.costs.check_total(p);
    if (opts.encoding.havoc_unsupported) havoc_unsupported(a.program);

    DomTree dt = immediate_dominators(p);
    a.portions = find_portions(p, dt);
    compute_bounds(a.portions, p, a.costs);
    a.tree = group_portions(a.portions, p);
    compute_bounds(a.tree, p, a.costs);
    if (opts.refine_portions) {
        // Found portions and internal tree nodes, refined innermost first.
        const std::size_t np = a.portions.size(), leaves = a.tree.num_leaves;
        std::vector<Portion> all = a.portions;
        all.insert(all.end(), a.tree.nodes.begin() + static_cast<long>(leaves), a.tree.nodes.end());
        refine_bounds(all, p, a.costs, opts.omt);
        std::copy(all.begin(), all.begin() + static_cast<long>(np), a.portions.begin());
        std::copy(all.begin() + static_cast<long>(np), all.end(), a.tree.nodes.begin() + static_cast<long>(leaves));
        for (std::size_t i = 0; i < leaves; ++i)
            for (const auto& x : a.portions)
                if (x.id == a.tree.nodes[i].id) a.tree.nodes[i].bound = x.bound;
    }

    a.result.syntactic_bound = syntactic_bound(p, a.costs);
    a.formula = encode_semantics(p, opts.encoding.havoc_unsupported);
    if (opts.encoding.cost_encoding == CostEncoding::Sum)
        encode_cost_sum(a.formula, p, a.costs);
    else
        encode_cost_counter(a.formula, p, a.costs);
    encode_cuts(a.formula, p, a.costs, select_cut_portions(opts.encoding.cuts, a.portions, a.tree, p, a.costs));
    return a;
}

Analysis analyze(const Program& input, const CostModel& input_costs, const AnalyzeOptions& opts) {
    Analysis a = prepare_analysis(input, input_costs, opts);
    const Program& p = a.program;
    Int syntactic = a.result.syntactic_bound;

    a.result = opts.strategy == Strategy::CutOrdered ? maximize_cut_ordered(a.formula, syntactic, opts.omt)
                                                     : maximize_binary_search(a.formula, syntactic, opts.omt);
    if (a.result.sound && a.result.stats.best_model && a.result.outcome == Outcome::Exact)
        a.result.witness = extract_witness(a.formula, *a.result.stats.best_model, p, a.costs);
    else if (a.result.stats.best_model && a.result.outcome == Outcome::UpperBound) {
        // Best path seen so far; a lower bound on the true WCET.
        a.result.witness = extract_witness(a.formula, *a.result.stats.best_model, p, a.costs);
    }
    return a;
}

}  // namespace wcet
