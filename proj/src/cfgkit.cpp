#include "wcet/cfgkit.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>

#include "wcet/error.hpp"

namespace wcet {

std::vector<BlockId> topo_order(const Program& p) {
    const std::size_t n = p.num_blocks();
    std::vector<std::size_t> indeg(n, 0);
    for (const Edge& e : p.edges()) ++indeg[e.to];
    std::priority_queue<BlockId, std::vector<BlockId>, std::greater<>> ready;
    for (BlockId b = 0; b < n; ++b)
        if (indeg[b] == 0) ready.push(b);
    std::vector<BlockId> order;
    order.reserve(n);
    while (!ready.empty()) {
        BlockId b = ready.top();
        ready.pop();
        order.push_back(b);
        for (EdgeId e : p.out_edges(b))
            if (--indeg[p.edges()[e].to] == 0) ready.push(p.edges()[e].to);
    }
    if (order.size() != n) throw Error("cfgkit", "topological order requested on a cyclic graph");
    return order;
}

std::vector<BlockId> reverse_post_order(const Program& p) {
    std::vector<bool> seen(p.num_blocks(), false);
    std::vector<BlockId> post;
    // Iterative DFS; each frame remembers the next successor index.
    std::vector<std::pair<BlockId, std::size_t>> stack{{p.entry, 0}};
    seen[p.entry] = true;
    while (!stack.empty()) {
        auto& [b, i] = stack.back();
        const auto& outs = p.out_edges(b);
        if (i < outs.size()) {
            BlockId s = p.edges()[outs[i++]].to;
            if (!seen[s]) {
                seen[s] = true;
                stack.push_back({s, 0});
            }
        } else {
            post.push_back(b);
            stack.pop_back();
        }
    }
    std::reverse(post.begin(), post.end());
    return post;
}

bool DomTree::dominates(BlockId a, BlockId b) const {
    for (;;) {
        if (a == b) return true;
        if (b == root) return false;
        b = idom[b];
    }
}

DomTree immediate_dominators(const Program& p) {
    const std::size_t n = p.num_blocks();
    auto rpo = reverse_post_order(p);
    if (rpo.size() != n) {
        std::vector<bool> seen(n, false);
        for (BlockId b : rpo) seen[b] = true;
        for (BlockId b = 0; b < n; ++b)
            if (!seen[b]) throw Error("cfgkit", "block '" + p.blocks[b].name + "' is unreachable from entry");
    }
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[rpo[i]] = i;

    constexpr BlockId undef = static_cast<BlockId>(-1);
    std::vector<BlockId> idom(n, undef);
    idom[p.entry] = p.entry;
    auto intersect = [&](BlockId a, BlockId b) {
        while (a != b) {
            while (pos[a] > pos[b]) a = idom[a];
            while (pos[b] > pos[a]) b = idom[b];
        }
        return a;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (BlockId b : rpo) {
            if (b == p.entry) continue;
            BlockId nd = undef;
            for (BlockId q : p.predecessors(b)) {
                if (idom[q] == undef) continue;
                nd = nd == undef ? q : intersect(q, nd);
            }
            if (nd != idom[b]) {
                idom[b] = nd;
                changed = true;
            }
        }
    }
    DomTree dt;
    dt.root = p.entry;
    dt.idom = std::move(idom);
    return dt;
}

std::string Portion::label(const Program& p) const {
    if (whole_program) return "program";
    return p.blocks[header].name + ".." + p.blocks[merge].name;
}

Scope Scope::whole(const Program& p) {
    return Scope{std::vector<bool>(p.edges().size(), true), std::vector<bool>(p.num_blocks(), true)};
}

Scope Scope::of(const Program& p, const Portion& portion) {
    if (portion.whole_program) return whole(p);
    Scope s{std::vector<bool>(p.edges().size(), false), std::vector<bool>(p.num_blocks(), false)};
    for (EdgeId e : portion.edges) s.edge_in[e] = true;
    for (BlockId b : portion.blocks) s.block_in[b] = true;
    return s;
}

namespace {

std::vector<bool> forward_from(const Program& p, BlockId from) {
    std::vector<bool> r(p.num_blocks(), false);
    std::vector<BlockId> work{from};
    r[from] = true;
    while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        for (BlockId s : p.successors(b))
            if (!r[s]) {
                r[s] = true;
                work.push_back(s);
            }
    }
    return r;
}

std::vector<bool> backward_from(const Program& p, BlockId to) {
    std::vector<bool> r(p.num_blocks(), false);
    std::vector<BlockId> work{to};
    r[to] = true;
    while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        for (BlockId q : p.predecessors(b))
            if (!r[q]) {
                r[q] = true;
                work.push_back(q);
            }
    }
    return r;
}

std::vector<BlockId> blocks_after_header(const Program& p, const std::vector<EdgeId>& edges) {
    std::vector<BlockId> out;
    for (EdgeId e : edges) out.push_back(p.edges()[e].to);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <class T>
std::vector<T> sorted_union(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool overlaps(const std::vector<EdgeId>& a, const std::vector<EdgeId>& b) {
    std::vector<EdgeId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return !out.empty();
}

bool includes(const std::vector<EdgeId>& big, const std::vector<EdgeId>& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// No block strictly inside the region has an edge leaving it.
bool closed_region(const Program& p, BlockId header, BlockId merge, const std::vector<EdgeId>& edges) {
    std::vector<bool> in(p.edges().size(), false);
    for (EdgeId e : edges) in[e] = true;
    for (EdgeId e : edges) {
        BlockId b = p.edges()[e].to;
        if (b == merge || b == header) continue;
        for (EdgeId o : p.out_edges(b))
            if (!in[o]) return false;
    }
    return true;
}

}  // namespace

std::vector<EdgeId> region_edges(const Program& p, BlockId from, BlockId to) {
    if (from == to) return {};
    auto fwd = forward_from(p, from);
    auto bwd = backward_from(p, to);
    std::vector<EdgeId> out;
    for (const Edge& e : p.edges())
        if (fwd[e.from] && bwd[e.to] && e.from != to && e.to != from) out.push_back(e.id);
    return out;
}

std::vector<Portion> find_portions(const Program& p, const DomTree& dt) {
    auto topo = topo_order(p);
    std::vector<std::size_t> pos(p.num_blocks());
    for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = i;

    std::vector<Portion> out;
    for (BlockId m : topo) {
        if (p.in_edges(m).size() < 2) continue;
        BlockId h = dt.idom[m];
        auto edges = region_edges(p, h, m);
        // Count header-to-merge paths, saturating at 2.
        std::vector<int> paths(p.num_blocks(), 0);
        std::vector<bool> in(p.edges().size(), false);
        for (EdgeId e : edges) in[e] = true;
        paths[h] = 1;
        for (BlockId b : topo) {
            if (pos[b] <= pos[h] || pos[b] > pos[m]) continue;
            for (EdgeId e : p.in_edges(b))
                if (in[e]) paths[b] = std::min(2, paths[b] + paths[p.edges()[e].from]);
        }
        if (paths[m] < 2) continue;
        Portion portion;
        portion.header = h;
        portion.merge = m;
        portion.edges = std::move(edges);
        portion.blocks = blocks_after_header(p, portion.edges);
        portion.contiguous = closed_region(p, h, m, portion.edges);
        out.push_back(std::move(portion));
    }
    std::stable_sort(out.begin(), out.end(), [&](const Portion& a, const Portion& b) {
        if (pos[a.header] != pos[b.header]) return pos[a.header] < pos[b.header];
        return pos[a.merge] < pos[b.merge];
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i;
    return out;
}

Portion whole_program_portion(const Program& p) {
    Portion w;
    w.header = p.entry;
    w.merge = p.exit;
    for (const Edge& e : p.edges()) w.edges.push_back(e.id);
    for (BlockId b = 0; b < p.num_blocks(); ++b) w.blocks.push_back(b);
    w.whole_program = true;
    return w;
}

PortionTree group_portions(const std::vector<Portion>& portions, const Program& p) {
    PortionTree tree;
    // Outermost: not contained in another portion's edge set.
    std::vector<const Portion*> outer;
    for (const auto& a : portions) {
        bool nested = false;
        for (const auto& b : portions)
            if (&a != &b && includes(b.edges, a.edges) && (b.edges != a.edges || b.id < a.id)) nested = true;
        if (!nested) outer.push_back(&a);
    }
    for (const Portion* a : outer) {
        bool clash = false;
        for (const auto& leaf : tree.nodes) clash = clash || overlaps(leaf.edges, a->edges);
        if (clash) continue;
        tree.nodes.push_back(*a);
        tree.children.push_back({-1, -1});
    }
    tree.num_leaves = tree.nodes.size();
    if (tree.nodes.empty()) return tree;

    std::vector<int> level(tree.nodes.size());
    for (std::size_t i = 0; i < level.size(); ++i) level[i] = static_cast<int>(i);
    while (level.size() > 1) {
        std::vector<int> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            const Portion l = tree.nodes[level[i]];
            const Portion r = tree.nodes[level[i + 1]];
            Portion parent;
            parent.header = l.header;
            parent.merge = r.merge;
            auto uni = sorted_union(l.edges, r.edges);
            auto region = region_edges(p, l.header, r.merge);
            if (!region.empty() && includes(region, uni)) {
                parent.contiguous = closed_region(p, parent.header, parent.merge, region);
                parent.edges = std::move(region);
            } else {
                parent.edges = std::move(uni);
                parent.contiguous = false;
            }
            parent.blocks = blocks_after_header(p, parent.edges);
            tree.nodes.push_back(std::move(parent));
            tree.children.push_back({level[i], level[i + 1]});
            next.push_back(static_cast<int>(tree.nodes.size() - 1));
        }
        if (level.size() % 2) next.push_back(level.back());
        level = std::move(next);
    }
    tree.root = level.front();
    if (tree.num_leaves >= 2) {
        Portion w = whole_program_portion(p);
        tree.nodes[tree.root].edges = std::move(w.edges);
        tree.nodes[tree.root].blocks = std::move(w.blocks);
        tree.nodes[tree.root].header = p.entry;
        tree.nodes[tree.root].merge = p.exit;
        tree.nodes[tree.root].whole_program = true;
        tree.nodes[tree.root].contiguous = true;
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (!tree.is_leaf(i)) tree.nodes[i].id = portions.size() + (i - tree.num_leaves);
    return tree;
}

LongestPathTable longest_paths(const Program& p, const CostModel& costs, const Scope& scope) {
    LongestPathTable t;
    t.w.assign(p.num_blocks(), 0);
    for (BlockId b : topo_order(p)) {
        Int best = 0;
        bool any = false;
        for (EdgeId e : p.in_edges(b)) {
            const Edge& ed = p.edges()[e];
            Int v = t.w[ed.from] + (scope.edge_in[e] ? costs.edge_cost(p, e) : 0);
            if (!any || v > best) best = v;
            any = true;
        }
        if (scope.block_in[b]) best += costs.block_cost(b);
        t.w[b] = best;
    }
    return t;
}

Int syntactic_bound(const Program& p, const CostModel& costs, const Scope& scope) {
    auto t = longest_paths(p, costs, scope);
    // Costs are nonnegative and every block reaches exit, so exit holds the max.
    return t.w[p.exit];
}

Int syntactic_bound(const Program& p, const CostModel& costs, const Portion& portion) {
    return syntactic_bound(p, costs, Scope::of(p, portion));
}

Int syntactic_bound(const Program& p, const CostModel& costs) { return syntactic_bound(p, costs, Scope::whole(p)); }

void compute_bounds_serial(std::vector<Portion>& portions, const Program& p, const CostModel& costs) {
    for (auto& portion : portions) portion.bound = syntactic_bound(p, costs, portion);
}

void compute_bounds(std::vector<Portion>& portions, const Program& p, const CostModel& costs) {
    const long n = static_cast<long>(portions.size());
    std::vector<std::string> errors(portions.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            portions[i].bound = syntactic_bound(p, costs, portions[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw Error("cfgkit", e);
}

std::string dump_structure(const Program& p, const DomTree& dt, const std::vector<Portion>& portions,
                           const PortionTree& tree) {
    std::ostringstream os;
    auto edge_name = [&](EdgeId e) { return edge_var(p.edges()[e].from, p.edges()[e].to); };
    auto write_portion = [&](const Portion& q) {
        os << q.label(p) << " bound=" << q.bound << (q.contiguous ? "" : " non-contiguous") << " edges={";
        for (std::size_t i = 0; i < q.edges.size(); ++i) os << (i ? "," : "") << edge_name(q.edges[i]);
        os << "}\n";
    };
    os << "program " << p.name << "\n";
    os << "topo";
    for (BlockId b : topo_order(p)) os << " " << p.blocks[b].name;
    os << "\nidom\n";
    for (BlockId b = 0; b < p.num_blocks(); ++b)
        os << "  " << p.blocks[b].name << " <- " << p.blocks[dt.idom[b]].name << "\n";
    os << "portions\n";
    for (const auto& q : portions) {
        os << "  P" << q.id << " ";
        write_portion(q);
    }
    os << "tree\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        os << "  N" << i << (static_cast<int>(i) == tree.root ? " root" : "");
        if (tree.is_leaf(i))
            os << " leaf ";
        else
            os << " (N" << tree.children[i].first << ",N" << tree.children[i].second << ") ";
        write_portion(tree.nodes[i]);
    }
    return os.str();
}

}  // namespace wcet
