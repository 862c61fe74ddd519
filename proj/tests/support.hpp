// Brute-force references shared by the unit tests and the acceptance run.
// Nothing here calls a solver or the analyzer's graph algorithms.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wcet/program.hpp"

#ifndef WCET_SOURCE_DIR
#define WCET_SOURCE_DIR "."
#endif

namespace wcet::test {

inline std::string source_path(const std::string& rel) { return std::string(WCET_SOURCE_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Structural paths by depth-first search over successors.
inline std::vector<std::vector<BlockId>> all_paths(const Program& p) {
    std::vector<std::vector<BlockId>> out;
    std::vector<BlockId> cur{p.entry};
    std::function<void()> go = [&] {
        BlockId b = cur.back();
        if (b == p.exit) {
            out.push_back(cur);
            return;
        }
        for (BlockId s : p.successors(b)) {
            cur.push_back(s);
            go();
            cur.pop_back();
        }
    };
    go();
    return out;
}

inline Int path_cost(const Program& p, const CostModel& c, const std::vector<BlockId>& path) {
    Int t = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        auto bc = c.block.find(path[i]);
        if (bc != c.block.end()) t += bc->second;
        if (i + 1 < path.size()) t += c.edge.at({path[i], path[i + 1]});
    }
    return t;
}

inline Int brute_syntactic_bound(const Program& p, const CostModel& c) {
    Int best = 0;
    for (const auto& path : all_paths(p)) best = std::max(best, path_cost(p, c, path));
    return best;
}

// d dominates b iff b == d or b is unreachable once d is removed.
inline bool brute_dominates(const Program& p, BlockId d, BlockId b) {
    if (d == b) return true;
    if (d == p.entry) return true;
    std::vector<bool> seen(p.num_blocks(), false);
    std::vector<BlockId> stack{p.entry};
    seen[p.entry] = true;
    while (!stack.empty()) {
        BlockId x = stack.back();
        stack.pop_back();
        for (BlockId s : p.successors(x))
            if (s != d && !seen[s]) {
                seen[s] = true;
                stack.push_back(s);
            }
    }
    return !seen[b];
}

inline BlockId brute_idom(const Program& p, BlockId b) {
    if (b == p.entry) return b;
    // The strict dominator that every other strict dominator dominates.
    std::vector<BlockId> sdom;
    for (BlockId d = 0; d < p.num_blocks(); ++d)
        if (d != b && brute_dominates(p, d, b)) sdom.push_back(d);
    for (BlockId d : sdom) {
        bool all = true;
        for (BlockId e : sdom) all &= brute_dominates(p, e, d);
        if (all) return d;
    }
    return b;
}

// Random DAG: one predecessor below each block, every block reaches the
// last one, up to two successors each. Branches read a Boolean input.
inline std::pair<Program, CostModel> random_dag(std::uint64_t seed, int max_blocks = 12) {
    std::mt19937_64 rng(seed);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int n = uni(1, max_blocks);
    std::vector<std::vector<int>> succ(n);
    for (int j = 1; j < n; ++j) {
        std::vector<int> free;
        for (int i = 0; i < j; ++i)
            if (succ[i].size() < 2) free.push_back(i);
        succ[free[uni(0, static_cast<int>(free.size()) - 1)]].push_back(j);
    }
    for (int i = 0; i + 1 < n; ++i) {
        if (succ[i].empty()) succ[i].push_back(uni(i + 1, n - 1));
        if (succ[i].size() == 1 && i + 2 < n && uni(0, 2) == 0) {
            int t = uni(i + 1, n - 1);
            if (t != succ[i][0]) succ[i].push_back(t);
        }
    }
    Program p;
    p.name = "dag" + std::to_string(seed);
    CostModel c;
    for (int i = 0; i < n; ++i) {
        Block b;
        b.name = "n" + std::to_string(i);
        std::sort(succ[i].begin(), succ[i].end());
        if (succ[i].size() == 2) {
            std::string v = "g" + std::to_string(i);
            p.inputs.push_back(HavocVar{v, Type::Bool, std::nullopt, std::nullopt, static_cast<BlockId>(i)});
            p.types[v] = Type::Bool;
            b.term = Branch{Expr::var(v), static_cast<BlockId>(succ[i][0]), static_cast<BlockId>(succ[i][1])};
        } else if (succ[i].size() == 1) {
            b.term = Goto{static_cast<BlockId>(succ[i][0])};
        } else {
            b.term = Return{};
        }
        p.blocks.push_back(std::move(b));
        for (int s : succ[i]) c.edge[{static_cast<BlockId>(i), static_cast<BlockId>(s)}] = uni(0, 20);
        if (uni(0, 3) == 0) c.block[static_cast<BlockId>(i)] = uni(1, 9);
    }
    p.entry = 0;
    p.exit = static_cast<BlockId>(n - 1);
    p.finalize();
    c.convention = c.block.empty() ? "edge" : "edge+block";
    return {std::move(p), std::move(c)};
}

// Concrete execution of a loop-free program for given input values.
struct Run {
    std::vector<BlockId> path;
    Int cost = 0;
    std::map<std::string, Value> env;
};

inline std::optional<Run> execute(const Program& p, const CostModel& c, const std::map<std::string, Value>& inputs) {
    Run r;
    auto look = [&](const std::string& v) -> std::optional<Value> {
        auto it = r.env.find(v);
        if (it == r.env.end()) return std::nullopt;
        return it->second;
    };
    auto truth = [&](const Expr& e) { return std::get<bool>(evaluate(e, look)); };
    BlockId b = p.entry;
    std::optional<BlockId> prev;
    for (;;) {
        r.path.push_back(b);
        const Block& blk = p.blocks[b];
        for (const auto& in : p.inputs)
            if (in.block == b) r.env[in.name] = inputs.at(in.name);
        std::map<std::string, Value> phis;
        for (const auto& ph : blk.phis)
            for (const auto& [src, v] : ph.sources)
                if (prev && src == *prev) phis[ph.target] = evaluate(v, look);
        for (auto& [k, v] : phis) r.env[k] = v;
        for (const auto& a : blk.assigns) r.env[a.var] = evaluate(a.value, look);
        for (const auto& a : blk.assumes)
            if (!truth(a)) return std::nullopt;
        auto bc = c.block.find(b);
        if (bc != c.block.end()) r.cost += bc->second;
        BlockId next;
        if (const auto* br = std::get_if<Branch>(&blk.term))
            next = truth(br->cond) ? br->then_target : br->else_target;
        else if (const auto* g = std::get_if<Goto>(&blk.term))
            next = g->target;
        else
            return r;
        r.cost += c.edge.at({b, next});
        prev = b;
        b = next;
    }
}

// Every input valuation within the ranges; Booleans take both values.
// Returns nullopt when the space exceeds `limit` points.
inline std::optional<std::vector<std::map<std::string, Value>>> input_space(const Program& p,
                                                                           std::size_t limit = 200000) {
    std::vector<std::map<std::string, Value>> out{{}};
    for (const auto& in : p.inputs) {
        std::vector<Value> dom;
        if (in.type == Type::Bool) {
            dom = {false, true};
        } else {
            if (!in.lo || !in.hi) return std::nullopt;
            for (Int v = *in.lo; v <= *in.hi; ++v) dom.push_back(v);
        }
        if (out.size() * dom.size() > limit) return std::nullopt;
        std::vector<std::map<std::string, Value>> next;
        for (const auto& m : out)
            for (const auto& v : dom) {
                auto m2 = m;
                m2[in.name] = v;
                next.push_back(std::move(m2));
            }
        out = std::move(next);
    }
    return out;
}

// Largest cost over all concrete executions; nullopt when none is feasible.
struct BruteResult {
    std::optional<Int> wcet;
    std::vector<BlockId> path;
    std::set<std::vector<BlockId>> feasible_paths;
};

inline BruteResult brute_wcet(const Program& p, const CostModel& c, const std::vector<std::map<std::string, Value>>& space) {
    BruteResult res;
    for (const auto& in : space) {
        auto r = execute(p, c, in);
        if (!r) continue;
        res.feasible_paths.insert(r->path);
        if (!res.wcet || r->cost > *res.wcet) {
            res.wcet = r->cost;
            res.path = r->path;
        }
    }
    return res;
}

inline std::vector<BlockId> kahn_order(const Program& p) {
    std::vector<int> indeg(p.num_blocks(), 0);
    for (BlockId b = 0; b < p.num_blocks(); ++b)
        for (BlockId s : p.successors(b)) ++indeg[s];
    std::vector<BlockId> out, ready;
    for (BlockId b = 0; b < p.num_blocks(); ++b)
        if (!indeg[b]) ready.push_back(b);
    while (!ready.empty()) {
        BlockId b = ready.back();
        ready.pop_back();
        out.push_back(b);
        for (BlockId s : p.successors(b))
            if (!--indeg[s]) ready.push_back(s);
    }
    return out;
}

// Assignment to every formula variable induced by one concrete run.
// Off-path phis get a default value; off-path definitions are evaluated
// anyway since the encoding asserts them unconditionally. Cut variables
// come from `cut_sums` (name -> sum term), evaluated last.
inline std::optional<std::map<std::string, Value>> model_of_run(const Program& p, const CostModel& c,
                                                                const std::map<std::string, Value>& inputs,
                                                                const std::vector<std::pair<std::string, Expr>>& cut_sums,
                                                                Int* cost_out = nullptr) {
    auto run = execute(p, c, inputs);
    if (!run) return std::nullopt;
    std::map<std::string, Value> env = inputs;
    std::set<BlockId> on(run->path.begin(), run->path.end());
    std::set<std::pair<BlockId, BlockId>> taken;
    for (std::size_t i = 0; i + 1 < run->path.size(); ++i) taken.insert({run->path[i], run->path[i + 1]});
    auto look = [&](const std::string& v) -> std::optional<Value> {
        auto it = env.find(v);
        if (it == env.end()) return std::nullopt;
        return it->second;
    };
    for (BlockId b : kahn_order(p)) {
        for (const auto& ph : p.blocks[b].phis) {
            Type t = p.types.count(ph.target) ? p.types.at(ph.target) : Type::Int;
            env[ph.target] = on.count(b) ? run->env.at(ph.target) : (t == Type::Int ? Value{Int{0}} : Value{false});
        }
        for (const auto& a : p.blocks[b].assigns) env[a.var] = evaluate(a.value, look);
    }

    std::map<std::string, Value> m;
    for (const auto& [k, v] : env) m[ssa_var(k)] = v;
    std::map<BlockId, Int> tau;
    for (std::size_t i = 0; i < run->path.size(); ++i) {
        BlockId b = run->path[i];
        Int prev = i ? tau[run->path[i - 1]] + c.edge.at({run->path[i - 1], b}) : 0;
        tau[b] = prev + c.block_cost(b);
    }
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        m[block_var(b)] = on.count(b) > 0;
        m["tau_" + std::to_string(b)] = tau.count(b) ? tau[b] : Int{0};
        if (c.block_cost(b)) m[block_cost_var(b)] = on.count(b) ? c.block_cost(b) : Int{0};
    }
    for (const Edge& e : p.edges()) {
        bool t = taken.count({e.from, e.to}) > 0;
        m[edge_var(e.from, e.to)] = t;
        m[edge_cost_var(e.from, e.to)] = t ? c.edge.at({e.from, e.to}) : Int{0};
    }
    m["cost"] = run->cost;
    if (cost_out) *cost_out = run->cost;
    auto mlook = [&](const std::string& v) -> std::optional<Value> {
        auto it = m.find(v);
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
    for (const auto& [name, sum] : cut_sums) m[name] = evaluate(sum, mlook);
    return m;
}

// Copy of `p` with integer input ranges clamped to [-r, r].
inline Program narrowed(Program p, Int r) {
    for (auto& in : p.inputs)
        if (in.type == Type::Int) {
            in.lo = std::max<Int>(in.lo.value_or(-r), -r);
            in.hi = std::min<Int>(in.hi.value_or(r), r);
        }
    return p;
}

}  // namespace wcet::test
