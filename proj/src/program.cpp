#include "wcet/program.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "wcet/cfgkit.hpp"
#include "wcet/error.hpp"

namespace wcet {

std::vector<BlockId> successors_of(const Terminator& t) {
    if (const auto* br = std::get_if<Branch>(&t)) return {br->then_target, br->else_target};
    if (const auto* g = std::get_if<Goto>(&t)) return {g->target};
    return {};
}

void Program::finalize() {
    edges_.clear();
    out_.assign(blocks.size(), {});
    in_.assign(blocks.size(), {});
    auto add_edge = [&](BlockId from, BlockId to, Expr guard) {
        if (to >= blocks.size())
            throw Error("ir", "block '" + blocks[from].name + "' jumps to unknown block #" + std::to_string(to));
        EdgeId id = static_cast<EdgeId>(edges_.size());
        edges_.push_back(Edge{id, from, to, std::move(guard)});
        out_[from].push_back(id);
        in_[to].push_back(id);
    };
    for (BlockId b = 0; b < blocks.size(); ++b) {
        const Terminator& t = blocks[b].term;
        if (const auto* br = std::get_if<Branch>(&t)) {
            if (br->then_target == br->else_target)
                throw Error("ir", "block '" + blocks[b].name + "' branches twice to the same block");
            add_edge(b, br->then_target, br->cond);
            add_edge(b, br->else_target, Expr::lnot(br->cond));
        } else if (const auto* g = std::get_if<Goto>(&t)) {
            add_edge(b, g->target, Expr::bool_const(true));
        }
    }
}

std::vector<BlockId> Program::successors(BlockId b) const {
    std::vector<BlockId> out;
    for (EdgeId e : out_[b]) out.push_back(edges_[e].to);
    return out;
}

std::vector<BlockId> Program::predecessors(BlockId b) const {
    std::vector<BlockId> out;
    for (EdgeId e : in_[b]) out.push_back(edges_[e].from);
    return out;
}

std::optional<EdgeId> Program::find_edge(BlockId from, BlockId to) const {
    if (from >= out_.size()) return std::nullopt;
    for (EdgeId e : out_[from])
        if (edges_[e].to == to) return e;
    return std::nullopt;
}

std::optional<BlockId> Program::find_block(const std::string& n) const {
    for (BlockId b = 0; b < blocks.size(); ++b)
        if (blocks[b].name == n) return b;
    return std::nullopt;
}

const HavocVar* Program::find_input(const std::string& n) const {
    for (const auto& h : inputs)
        if (h.name == n) return &h;
    return nullptr;
}

std::optional<Type> Program::type_of_var(const std::string& n) const {
    auto it = types.find(n);
    if (it != types.end()) return it->second;
    if (const auto* h = find_input(n)) return h->type;
    return std::nullopt;
}

Int CostModel::edge_cost(const Program& p, EdgeId e) const {
    const Edge& ed = p.edges()[e];
    auto it = edge.find({ed.from, ed.to});
    if (it == edge.end())
        throw Error("ir", "no cost for edge " + p.blocks[ed.from].name + " -> " + p.blocks[ed.to].name);
    return it->second;
}

Int CostModel::block_cost(BlockId b) const {
    auto it = block.find(b);
    return it == block.end() ? 0 : it->second;
}

bool CostModel::has_block_costs() const {
    return std::any_of(block.begin(), block.end(), [](const auto& kv) { return kv.second != 0; });
}

void CostModel::check_total(const Program& p) const {
    for (const Edge& e : p.edges()) {
        Int c = edge_cost(p, e.id);
        if (c < 0) throw Error("ir", "negative cost on edge " + p.blocks[e.from].name + " -> " + p.blocks[e.to].name);
    }
    for (const auto& [b, c] : block) {
        if (b >= p.num_blocks()) throw Error("ir", "cost for unknown block #" + std::to_string(b));
        if (c < 0) throw Error("ir", "negative cost on block " + p.blocks[b].name);
    }
}

CostModel zero_costs(const Program& p) {
    CostModel c;
    for (const Edge& e : p.edges()) c.edge[{e.from, e.to}] = 0;
    return c;
}

std::optional<CycleReport> check_loop_free(const Program& p) {
    // 0 = unvisited, 1 = on stack, 2 = done
    std::vector<int> state(p.num_blocks(), 0);
    std::vector<BlockId> stack;
    std::optional<CycleReport> found;
    std::function<void(BlockId)> dfs = [&](BlockId b) {
        state[b] = 1;
        stack.push_back(b);
        for (BlockId s : p.successors(b)) {
            if (found) return;
            if (state[s] == 1) {
                auto it = std::find(stack.begin(), stack.end(), s);
                found = CycleReport{std::vector<BlockId>(it, stack.end())};
                return;
            }
            if (state[s] == 0) dfs(s);
        }
        stack.pop_back();
        state[b] = 2;
    };
    for (BlockId b = 0; b < p.num_blocks() && !found; ++b)
        if (state[b] == 0) dfs(b);
    return found;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("ir", msg); }

}  // namespace

void validate_program(const Program& p, bool require_loop_free) {
    const std::size_t n = p.num_blocks();
    if (n == 0) fail("program has no blocks");
    if (p.entry >= n || p.exit >= n) fail("entry or exit refers to an unknown block");
    if (!p.in_edges(p.entry).empty()) fail("entry block '" + p.blocks[p.entry].name + "' has incoming edges");
    for (BlockId b = 0; b < n; ++b) {
        bool ret = std::holds_alternative<Return>(p.blocks[b].term);
        if (ret && b != p.exit) fail("block '" + p.blocks[b].name + "' returns but is not the exit");
        if (!ret && b == p.exit) fail("exit block '" + p.blocks[b].name + "' must end in return");
    }
    if (require_loop_free) {
        if (auto cyc = check_loop_free(p)) {
            std::string names;
            for (BlockId b : cyc->blocks) names += (names.empty() ? "" : ", ") + p.blocks[b].name;
            fail("control-flow graph has a cycle through [" + names + "]");
        }
    }

    // Every block must reach exit.
    std::vector<bool> reaches(n, false);
    std::vector<BlockId> work{p.exit};
    reaches[p.exit] = true;
    while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        for (BlockId q : p.predecessors(b))
            if (!reaches[q]) {
                reaches[q] = true;
                work.push_back(q);
            }
    }
    for (BlockId b = 0; b < n; ++b)
        if (!reaches[b]) fail("block '" + p.blocks[b].name + "' cannot reach the exit");

    DomTree dt;
    try {
        dt = immediate_dominators(p);
    } catch (const Error& e) {
        throw Error("ir", e.what());
    }

    // Definition sites.
    std::map<std::string, BlockId> def_block;
    auto define = [&](const std::string& v, BlockId b) {
        if (!def_block.emplace(v, b).second) fail("SSA variable '" + v + "' is defined more than once");
    };
    for (const auto& h : p.inputs) {
        if (h.block >= n) fail("input '" + h.name + "' placed in unknown block");
        if (h.lo && h.hi && *h.lo > *h.hi) fail("input '" + h.name + "' has an empty range");
        define(h.name, h.block);
    }
    for (BlockId b = 0; b < n; ++b) {
        for (const auto& ph : p.blocks[b].phis) define(ph.target, b);
        for (const auto& a : p.blocks[b].assigns) define(a.var, b);
    }

    auto lookup = [&](const std::string& v) { return p.type_of_var(v); };
    auto check_expr = [&](const Expr& e, const std::string& where) {
        if (!is_linear(e)) fail(where + ": non-linear expression " + to_sexpr(e));
        try {
            return type_of(e, lookup);
        } catch (const Error& err) {
            fail(where + ": " + err.what());
        }
    };

    for (BlockId b = 0; b < n; ++b) {
        const Block& blk = p.blocks[b];
        // Available at the point of use: defined in a strict dominator, or
        // earlier in this block.
        std::set<std::string> local;
        for (const auto& h : p.inputs)
            if (h.block == b) local.insert(h.name);
        for (const auto& ph : blk.phis) local.insert(ph.target);
        auto check_uses = [&](const Expr& e, const std::string& where) {
            for (const auto& v : vars_of(e)) {
                auto it = def_block.find(v);
                if (it == def_block.end()) fail(where + ": use of undefined variable '" + v + "'");
                if (local.count(v)) continue;
                if (!dt.strictly_dominates(it->second, b))
                    fail(where + ": use of '" + v + "' is not dominated by its definition");
            }
        };

        auto preds = p.predecessors(b);
        std::set<BlockId> pred_set(preds.begin(), preds.end());
        for (const auto& ph : blk.phis) {
            std::string where = "phi " + ph.target + " in '" + blk.name + "'";
            std::set<BlockId> srcs;
            auto ty = p.type_of_var(ph.target);
            for (const auto& [src, val] : ph.sources) {
                if (!pred_set.count(src)) fail(where + ": source is not a predecessor");
                if (!srcs.insert(src).second) fail(where + ": duplicate source");
                Type t = check_expr(val, where);
                if (ty && t != *ty) fail(where + ": source type mismatch");
                for (const auto& v : vars_of(val)) {
                    auto it = def_block.find(v);
                    if (it == def_block.end()) fail(where + ": use of undefined variable '" + v + "'");
                    if (!dt.dominates(it->second, src))
                        fail(where + ": '" + v + "' is not available on the edge from '" + p.blocks[src].name + "'");
                }
            }
            if (srcs.size() != pred_set.size()) fail(where + ": sources do not cover every incoming edge");
        }
        for (const auto& a : blk.assigns) {
            std::string where = "assignment to " + a.var + " in '" + blk.name + "'";
            Type t = check_expr(a.value, where);
            auto ty = p.type_of_var(a.var);
            if (ty && t != *ty) fail(where + ": type mismatch");
            check_uses(a.value, where);
            local.insert(a.var);
        }
        for (const auto& as : blk.assumes) {
            std::string where = "assume in '" + blk.name + "'";
            if (check_expr(as, where) != Type::Bool) fail(where + ": condition is not Boolean");
            check_uses(as, where);
        }
        if (const auto* br = std::get_if<Branch>(&blk.term)) {
            std::string where = "branch of '" + blk.name + "'";
            if (check_expr(br->cond, where) != Type::Bool) fail(where + ": condition is not Boolean");
            check_uses(br->cond, where);
        }
    }
}

void infer_types(Program& p) {
    auto lookup = [&](const std::string& v) { return p.type_of_var(v); };
    // Phis may reference later definitions in loops; iterate to a fixpoint.
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& blk : p.blocks) {
            for (const auto& a : blk.assigns) {
                if (p.types.count(a.var)) continue;
                try {
                    p.types[a.var] = type_of(a.value, lookup);
                    changed = true;
                } catch (const Error&) {
                }
            }
            for (const auto& ph : blk.phis) {
                if (p.types.count(ph.target)) continue;
                for (const auto& [src, val] : ph.sources) {
                    try {
                        p.types[ph.target] = type_of(val, lookup);
                        changed = true;
                        break;
                    } catch (const Error&) {
                    }
                }
            }
        }
    }
}

std::size_t havoc_unsupported(Program& p) {
    std::size_t count = 0;
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        auto& assigns = p.blocks[b].assigns;
        std::vector<Assign> kept;
        for (auto& a : assigns) {
            if (is_linear(a.value)) {
                kept.push_back(std::move(a));
                continue;
            }
            HavocVar h;
            h.name = a.var;
            h.type = Type::Int;
            h.block = b;
            p.inputs.push_back(h);
            p.types.erase(a.var);
            ++count;
        }
        assigns = std::move(kept);
    }
    return count;
}

std::string block_var(BlockId b) { return "b_" + std::to_string(b); }
std::string edge_var(BlockId from, BlockId to) { return "t_" + std::to_string(from) + "_" + std::to_string(to); }
std::string edge_cost_var(BlockId from, BlockId to) {
    return "c_" + std::to_string(from) + "_" + std::to_string(to);
}
std::string block_cost_var(BlockId b) { return "c_" + std::to_string(b); }
std::string ssa_var(const std::string& name) { return "x_" + name; }

}  // namespace wcet
