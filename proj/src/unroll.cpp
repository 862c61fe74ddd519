#include "wcet/unroll.hpp"

#include <algorithm>
#include <set>

#include "wcet/cfgkit.hpp"
#include "wcet/error.hpp"

namespace wcet {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("ir", msg); }

struct Loop {
    BlockId header;
    BlockId latch;
    std::set<BlockId> body;  // includes header
};

std::vector<Loop> natural_loops(const Program& p) {
    DomTree dt = immediate_dominators(p);
    std::map<BlockId, std::vector<BlockId>> latches;
    for (const Edge& e : p.edges())
        if (dt.dominates(e.to, e.from)) latches[e.to].push_back(e.from);
    std::vector<Loop> loops;
    for (const auto& [h, ls] : latches) {
        if (ls.size() != 1) fail("loop at '" + p.blocks[h].name + "' has several latches");
        Loop l{h, ls.front(), {h}};
        std::vector<BlockId> work{ls.front()};
        while (!work.empty()) {
            BlockId b = work.back();
            work.pop_back();
            if (!l.body.insert(b).second) continue;
            for (BlockId q : p.predecessors(b)) work.push_back(q);
        }
        loops.push_back(std::move(l));
    }
    return loops;
}

std::string copy_name(const std::string& n, Int j) { return n + "@" + std::to_string(j); }

// Unrolls one innermost loop; returns the new program and origin of each block.
std::pair<Program, std::vector<BlockId>> unroll_one(const Program& p, const Loop& loop, Int k) {
    const BlockId h = loop.header;
    const Block& hb = p.blocks[h];
    const auto* br = std::get_if<Branch>(&hb.term);
    if (!br) fail("loop header '" + hb.name + "' does not end in a conditional branch");
    bool then_inside = loop.body.count(br->then_target) > 0;
    bool else_inside = loop.body.count(br->else_target) > 0;
    if (then_inside == else_inside) fail("loop header '" + hb.name + "' has no exit edge");
    BlockId exit = then_inside ? br->else_target : br->then_target;
    Expr stay = then_inside ? br->cond : Expr::lnot(br->cond);
    for (BlockId b : loop.body) {
        if (b == h) continue;
        for (BlockId s : p.successors(b))
            if (!loop.body.count(s))
                fail("loop at '" + hb.name + "' exits from '" + p.blocks[b].name + "', not from its header");
    }

    // Variables defined inside the loop.
    std::set<std::string> local;
    for (BlockId b : loop.body) {
        for (const auto& ph : p.blocks[b].phis) local.insert(ph.target);
        for (const auto& a : p.blocks[b].assigns) local.insert(a.var);
    }
    for (const auto& in : p.inputs)
        if (loop.body.count(in.block)) local.insert(in.name);
    auto renamer = [&](Int j) {
        return [&local, j](const std::string& v) { return local.count(v) ? copy_name(v, j) : v; };
    };

    // Outside uses of loop values are only allowed through exit phis.
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        if (loop.body.count(b)) continue;
        const Block& blk = p.blocks[b];
        auto check = [&](const Expr& e) {
            for (const auto& v : vars_of(e))
                if (local.count(v))
                    fail("value '" + v + "' escapes the loop at '" + hb.name + "' without an exit phi");
        };
        for (const auto& ph : blk.phis)
            for (const auto& [src, v] : ph.sources)
                if (!(b == exit && src == h)) check(v);
        for (const auto& a : blk.assigns) check(a.value);
        for (const auto& a : blk.assumes) check(a);
        if (const auto* b2 = std::get_if<Branch>(&blk.term)) check(b2->cond);
    }

    // New block layout: outside blocks in order, copies placed at the header.
    std::vector<BlockId> origin;
    std::map<std::pair<BlockId, Int>, BlockId> copy_of;  // (old, j) -> new; j = -1 for outside
    std::vector<BlockId> body_order(loop.body.begin(), loop.body.end());
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        if (b == h) {
            for (Int j = 0; j <= k; ++j) {
                copy_of[{h, j}] = static_cast<BlockId>(origin.size());
                origin.push_back(h);
                if (j == k) break;
                for (BlockId x : body_order) {
                    if (x == h) continue;
                    copy_of[{x, j}] = static_cast<BlockId>(origin.size());
                    origin.push_back(x);
                }
            }
        } else if (!loop.body.count(b)) {
            copy_of[{b, -1}] = static_cast<BlockId>(origin.size());
            origin.push_back(b);
        }
    }
    auto outside = [&](BlockId b) { return copy_of.at({b, -1}); };
    // Target of a jump from inside copy j.
    auto inside_target = [&](BlockId t, Int j) {
        if (t == h) return copy_of.at({h, j + 1});
        if (loop.body.count(t)) return copy_of.at({t, j});
        return outside(t);
    };

    Program q;
    q.name = p.name;
    q.blocks.resize(origin.size());
    q.entry = p.entry == h ? copy_of.at({h, 0}) : outside(p.entry);
    q.exit = outside(p.exit);

    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        if (loop.body.count(b)) continue;
        Block blk = p.blocks[b];
        if (b == exit) {
            for (auto& ph : blk.phis) {
                std::vector<std::pair<BlockId, Expr>> srcs;
                for (const auto& [src, v] : ph.sources) {
                    if (src != h) {
                        srcs.push_back({outside(src), v});
                        continue;
                    }
                    for (Int j = 0; j <= k; ++j) srcs.push_back({copy_of.at({h, j}), rename_vars(v, renamer(j))});
                }
                ph.sources = std::move(srcs);
            }
        } else {
            for (auto& ph : blk.phis)
                for (auto& src : ph.sources) {
                    if (src.first == h) fail("loop header '" + hb.name + "' feeds a phi outside its exit block");
                    src.first = outside(src.first);
                }
        }
        auto retarget = [&](BlockId t) { return t == h ? copy_of.at({h, 0}) : outside(t); };
        if (auto* b2 = std::get_if<Branch>(&blk.term)) {
            b2->then_target = retarget(b2->then_target);
            b2->else_target = retarget(b2->else_target);
        } else if (auto* g = std::get_if<Goto>(&blk.term)) {
            g->target = retarget(g->target);
        }
        q.blocks[outside(b)] = std::move(blk);
    }

    for (Int j = 0; j <= k; ++j) {
        auto rn = renamer(j);
        // Header copy.
        Block hc;
        hc.name = copy_name(hb.name, j);
        for (const auto& ph : hb.phis) {
            Phi np;
            np.target = rn(ph.target);
            for (const auto& [src, v] : ph.sources) {
                bool from_latch = src == loop.latch;
                if (j == 0 && !from_latch) np.sources.push_back({outside(src), v});
                if (j > 0 && from_latch)
                    np.sources.push_back({copy_of.at({loop.latch, j - 1}), rename_vars(v, renamer(j - 1))});
            }
            hc.phis.push_back(std::move(np));
        }
        for (const auto& a : hb.assigns) hc.assigns.push_back(Assign{rn(a.var), rename_vars(a.value, rn)});
        for (const auto& a : hb.assumes) hc.assumes.push_back(rename_vars(a, rn));
        if (j < k) {
            hc.term = Branch{rename_vars(br->cond, rn), inside_target(br->then_target, j),
                             inside_target(br->else_target, j)};
        } else {
            hc.assumes.push_back(Expr::lnot(rename_vars(stay, rn)));
            hc.term = Goto{outside(exit)};
        }
        q.blocks[copy_of.at({h, j})] = std::move(hc);
        if (j == k) break;

        for (BlockId x : body_order) {
            if (x == h) continue;
            const Block& xb = p.blocks[x];
            Block c;
            c.name = copy_name(xb.name, j);
            for (const auto& ph : xb.phis) {
                Phi np;
                np.target = rn(ph.target);
                for (const auto& [src, v] : ph.sources) np.sources.push_back({copy_of.at({src, j}), rename_vars(v, rn)});
                c.phis.push_back(std::move(np));
            }
            for (const auto& a : xb.assigns) c.assigns.push_back(Assign{rn(a.var), rename_vars(a.value, rn)});
            for (const auto& a : xb.assumes) c.assumes.push_back(rename_vars(a, rn));
            if (const auto* b2 = std::get_if<Branch>(&xb.term)) {
                c.term = Branch{rename_vars(b2->cond, rn), inside_target(b2->then_target, j),
                                inside_target(b2->else_target, j)};
            } else if (const auto* g = std::get_if<Goto>(&xb.term)) {
                c.term = Goto{inside_target(g->target, j)};
            }
            q.blocks[copy_of.at({x, j})] = std::move(c);
        }
    }

    for (const auto& in : p.inputs) {
        if (!loop.body.count(in.block)) {
            HavocVar v = in;
            v.block = outside(in.block);
            q.inputs.push_back(v);
            continue;
        }
        for (Int j = 0; j <= k; ++j) {
            if (in.block != h && j == k) break;
            HavocVar v = in;
            v.name = copy_name(in.name, j);
            v.block = copy_of.at({in.block, j});
            q.inputs.push_back(v);
        }
    }
    for (const auto& [name, t] : p.types) {
        if (!local.count(name)) {
            q.types[name] = t;
            continue;
        }
        for (Int j = 0; j <= k; ++j) q.types[copy_name(name, j)] = t;
    }
    for (const auto& [hdr, bound] : p.loop_bounds) {
        if (hdr == h) continue;
        if (loop.body.count(hdr)) fail("internal error: nested loop left inside an innermost loop");
        q.loop_bounds[outside(hdr)] = bound;
    }
    q.finalize();
    return {std::move(q), std::move(origin)};
}

}  // namespace

CostModel UnrollResult::remap_costs(const CostModel& costs) const {
    CostModel out;
    out.convention = costs.convention;
    for (const Edge& e : program.edges()) {
        auto it = costs.edge.find({origin[e.from], origin[e.to]});
        if (it != costs.edge.end()) out.edge[{e.from, e.to}] = it->second;
    }
    for (BlockId b = 0; b < program.num_blocks(); ++b)
        if (Int c = costs.block_cost(origin[b])) out.block[b] = c;
    return out;
}

UnrollResult unroll(const Program& p, const UnrollOptions& opts) {
    UnrollResult r;
    r.program = p;
    r.origin.resize(p.num_blocks());
    for (BlockId b = 0; b < p.num_blocks(); ++b) r.origin[b] = b;

    while (check_loop_free(r.program)) {
        auto loops = natural_loops(r.program);
        if (loops.empty()) fail("control flow is irreducible; cannot identify loops");
        const Loop* inner = nullptr;
        for (const auto& l : loops) {
            bool contains_other = std::any_of(loops.begin(), loops.end(), [&](const Loop& o) {
                return o.header != l.header && l.body.count(o.header);
            });
            if (!contains_other) {
                inner = &l;
                break;
            }
        }
        if (!inner) fail("could not find an innermost loop");
        const std::string& name = r.program.blocks[inner->header].name;
        Int k;
        if (auto it = r.program.loop_bounds.find(inner->header); it != r.program.loop_bounds.end())
            k = it->second;
        else if (opts.default_bound)
            k = *opts.default_bound;
        else
            fail("unbounded loop at '" + name + "': give it a bound or a default bound");
        if (k < 0) fail("negative bound for loop at '" + name + "'");
        if (k > opts.limit)
            fail("bound " + std::to_string(k) + " of loop at '" + name + "' exceeds the unroll limit " +
                 std::to_string(opts.limit));
        auto [q, origin] = unroll_one(r.program, *inner, k);
        for (auto& o : origin) o = r.origin[o];
        r.program = std::move(q);
        r.origin = std::move(origin);
    }
    r.program.loop_bounds.clear();
    validate_program(r.program, true);
    return r;
}

}  // namespace wcet
