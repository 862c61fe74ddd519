#include "wcet/encode.hpp"

#include <algorithm>
#include <set>

#include "wcet/error.hpp"

namespace wcet {

std::string_view to_string(CostEncoding e) { return e == CostEncoding::Sum ? "sum" : "counter"; }

std::string_view to_string(CutMode m) {
    switch (m) {
        case CutMode::None: return "none";
        case CutMode::Leaves: return "leaves";
        case CutMode::Hierarchical: return "hierarchical";
    }
    return "?";
}

CostEncoding parse_cost_encoding(std::string_view s) {
    if (s == "sum") return CostEncoding::Sum;
    if (s == "counter") return CostEncoding::Counter;
    throw Error("encode", "unknown cost encoding '" + std::string(s) + "'");
}

CutMode parse_cut_mode(std::string_view s) {
    if (s == "none") return CutMode::None;
    if (s == "leaves") return CutMode::Leaves;
    if (s == "hierarchical") return CutMode::Hierarchical;
    throw Error("encode", "unknown cut mode '" + std::string(s) + "'");
}

void Formula::declare(const std::string& name, Type t) {
    if (declared(name)) throw Error("encode", "symbol '" + name + "' declared twice");
    decls.push_back(Decl{name, t});
}

bool Formula::declared(const std::string& name) const { return type_of(name).has_value(); }

std::optional<Type> Formula::type_of(const std::string& name) const {
    for (const auto& d : decls)
        if (d.name == name) return d.type;
    return std::nullopt;
}

std::vector<Expr> Formula::cut_assertions() const {
    std::vector<Expr> out;
    for (const auto& c : cuts) {
        if (c.whole_program) {
            out.push_back(Expr::le(Expr::var(cost_var), Expr::int_const(c.bound)));
            continue;
        }
        out.push_back(Expr::eq(Expr::var(c.var), c.sum));
        out.push_back(Expr::le(Expr::var(c.var), Expr::int_const(c.bound)));
    }
    return out;
}

std::vector<Expr> Formula::all_assertions() const {
    std::vector<Expr> out;
    for (const auto& a : asserts) out.push_back(a.expr);
    for (auto& e : cut_assertions()) out.push_back(std::move(e));
    return out;
}

namespace {

Expr ssa(const Expr& e) { return rename_vars(e, [](const std::string& v) { return ssa_var(v); }); }

Expr bvar(BlockId b) { return Expr::var(block_var(b)); }
Expr tvar(const Edge& e) { return Expr::var(edge_var(e.from, e.to)); }

// In-edges ordered by source block index.
std::vector<EdgeId> sorted_in(const Program& p, BlockId b) {
    auto in = p.in_edges(b);
    std::stable_sort(in.begin(), in.end(),
                     [&](EdgeId x, EdgeId y) { return p.edges()[x].from < p.edges()[y].from; });
    return in;
}

}  // namespace

Formula encode_semantics(const Program& p, bool havoc_unsupported) {
    Formula f;
    for (BlockId b = 0; b < p.num_blocks(); ++b) f.declare(block_var(b), Type::Bool);
    for (const Edge& e : p.edges()) f.declare(edge_var(e.from, e.to), Type::Bool);
    auto var_type = [&](const std::string& v) {
        auto t = p.type_of_var(v);
        if (!t) throw Error("encode", "variable '" + v + "' has no type");
        return *t;
    };
    for (const auto& in : p.inputs) f.declare(ssa_var(in.name), in.type);
    for (const auto& blk : p.blocks) {
        for (const auto& ph : blk.phis) f.declare(ssa_var(ph.target), var_type(ph.target));
        for (const auto& a : blk.assigns) f.declare(ssa_var(a.var), var_type(a.var));
    }

    for (const auto& in : p.inputs) {
        Expr x = Expr::var(ssa_var(in.name));
        if (in.lo && in.hi)
            f.add(Expr::land(Expr::le(Expr::int_const(*in.lo), x), Expr::le(x, Expr::int_const(*in.hi))),
                  Section::Semantics);
        else if (in.lo)
            f.add(Expr::le(Expr::int_const(*in.lo), x), Section::Semantics);
        else if (in.hi)
            f.add(Expr::le(x, Expr::int_const(*in.hi)), Section::Semantics);
    }

    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        const Block& blk = p.blocks[b];
        auto in = sorted_in(p, b);
        if (b != p.entry) {
            std::vector<Expr> ts;
            for (EdgeId e : in) ts.push_back(tvar(p.edges()[e]));
            f.add(Expr::eq(bvar(b), Expr::lor(ts)), Section::Semantics);
        }
        for (const auto& ph : blk.phis) {
            // ite chain in phi source order; the last source is the default.
            Expr chain;
            for (std::size_t i = ph.sources.size(); i-- > 0;) {
                Expr v = ssa(ph.sources[i].second);
                if (i + 1 == ph.sources.size()) {
                    chain = v;
                    continue;
                }
                auto e = p.find_edge(ph.sources[i].first, b);
                if (!e) throw Error("encode", "phi " + ph.target + " names a non-predecessor");
                chain = Expr::ite(tvar(p.edges()[*e]), v, chain);
            }
            f.add(Expr::implies(bvar(b), Expr::eq(Expr::var(ssa_var(ph.target)), chain)), Section::Semantics);
        }
        for (const auto& a : blk.assigns) {
            if (!is_linear(a.value)) {
                if (havoc_unsupported) continue;
                throw Error("encode", "non-linear definition of '" + a.var + "': " + to_sexpr(a.value));
            }
            f.add(Expr::eq(Expr::var(ssa_var(a.var)), ssa(a.value)), Section::Semantics);
        }
        for (const auto& as : blk.assumes) f.add(Expr::implies(bvar(b), ssa(as)), Section::Semantics);
        for (EdgeId e : p.out_edges(b)) {
            const Edge& ed = p.edges()[e];
            f.add(Expr::eq(tvar(ed), Expr::land(bvar(b), ssa(ed.guard))), Section::Semantics);
        }
    }
    f.add(Expr::eq(bvar(p.entry), Expr::bool_const(true)), Section::Semantics);
    if (p.exit != p.entry) f.add(Expr::eq(bvar(p.exit), Expr::bool_const(true)), Section::Semantics);
    return f;
}

void encode_cost_sum(Formula& f, const Program& p, const CostModel& costs) {
    f.encoding = CostEncoding::Sum;
    std::vector<Expr> terms;
    for (const Edge& e : p.edges()) {
        std::string c = edge_cost_var(e.from, e.to);
        f.declare(c, Type::Int);
        f.add(Expr::eq(Expr::var(c), Expr::ite(tvar(e), Expr::int_const(costs.edge_cost(p, e.id)), Expr::int_const(0))),
              Section::Timing);
        terms.push_back(Expr::var(c));
    }
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        Int k = costs.block_cost(b);
        if (!k) continue;
        std::string c = block_cost_var(b);
        f.declare(c, Type::Int);
        f.add(Expr::eq(Expr::var(c), Expr::ite(bvar(b), Expr::int_const(k), Expr::int_const(0))), Section::Timing);
        terms.push_back(Expr::var(c));
    }
    f.declare(f.cost_var, Type::Int);
    f.add(Expr::eq(Expr::var(f.cost_var), Expr::add(terms)), Section::Timing);
}

namespace {
std::string tau(BlockId b) { return "tau_" + std::to_string(b); }

Expr plus_const(Expr a, Int k) { return k ? Expr::add(std::move(a), Expr::int_const(k)) : a; }
}  // namespace

void encode_cost_counter(Formula& f, const Program& p, const CostModel& costs) {
    f.encoding = CostEncoding::Counter;
    for (BlockId b = 0; b < p.num_blocks(); ++b) f.declare(tau(b), Type::Int);
    f.add(Expr::eq(Expr::var(tau(p.entry)), Expr::int_const(costs.block_cost(p.entry))), Section::Timing);
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        if (b == p.entry) continue;
        auto in = sorted_in(p, b);
        Expr chain;
        for (std::size_t i = in.size(); i-- > 0;) {
            const Edge& e = p.edges()[in[i]];
            Expr v = plus_const(Expr::var(tau(e.from)), costs.edge_cost(p, e.id));
            chain = i + 1 == in.size() ? v : Expr::ite(tvar(e), v, chain);
        }
        f.add(Expr::implies(bvar(b), Expr::eq(Expr::var(tau(b)), plus_const(chain, costs.block_cost(b)))),
              Section::Timing);
    }
    f.declare(f.cost_var, Type::Int);
    f.add(Expr::eq(Expr::var(f.cost_var), Expr::var(tau(p.exit))), Section::Timing);
}

Expr portion_sum(const Program& p, const CostModel& costs, const Portion& portion) {
    std::vector<Expr> terms;
    for (EdgeId e : portion.edges) {
        const Edge& ed = p.edges()[e];
        terms.push_back(Expr::var(edge_cost_var(ed.from, ed.to)));
    }
    for (BlockId b : portion.blocks)
        if (costs.block_cost(b)) terms.push_back(Expr::var(block_cost_var(b)));
    return Expr::add(terms);
}

void encode_cuts(Formula& f, const Program& p, const CostModel& costs, const std::vector<Portion>& portions) {
    auto topo = topo_order(p);
    std::vector<std::size_t> pos(p.num_blocks());
    for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = i;
    for (const auto& portion : portions) {
        Cut c;
        c.portion_id = portion.id;
        c.bound = portion.bound;
        c.label = portion.label(p);
        c.whole_program = portion.whole_program;
        c.size = portion.edges.size();
        c.header_pos = pos[portion.header];
        if (!portion.whole_program) {
            if (f.encoding == CostEncoding::Counter) {
                if (!portion.contiguous) continue;
                c.sum = Expr::ite(bvar(portion.merge), Expr::sub(Expr::var(tau(portion.merge)), Expr::var(tau(portion.header))),
                                  Expr::int_const(0));
            } else {
                c.sum = portion_sum(p, costs, portion);
            }
            c.var = "cut_" + std::to_string(portion.id);
            f.declare(c.var, Type::Int);
        }
        f.cuts.push_back(std::move(c));
    }
}

std::vector<Portion> select_cut_portions(CutMode mode, const std::vector<Portion>& portions, const PortionTree& tree,
                                         const Program& p, const CostModel& costs) {
    std::vector<Portion> out;
    if (mode == CutMode::None) return out;
    out = portions;
    if (mode == CutMode::Hierarchical)
        for (std::size_t i = tree.num_leaves; i < tree.nodes.size(); ++i)
            if (!tree.nodes[i].whole_program) out.push_back(tree.nodes[i]);
    Portion whole = whole_program_portion(p);
    whole.id = portions.size() + tree.nodes.size();
    whole.bound = syntactic_bound(p, costs);
    out.push_back(std::move(whole));
    return out;
}

Formula encode(const Program& p, const CostModel& costs, const EncodingOptions& opts) {
    Formula f = encode_semantics(p, opts.havoc_unsupported);
    if (opts.cost_encoding == CostEncoding::Sum)
        encode_cost_sum(f, p, costs);
    else
        encode_cost_counter(f, p, costs);
    if (opts.cuts != CutMode::None) {
        DomTree dt = immediate_dominators(p);
        auto portions = find_portions(p, dt);
        compute_bounds(portions, p, costs);
        PortionTree tree = group_portions(portions, p);
        compute_bounds(tree, p, costs);
        encode_cuts(f, p, costs, select_cut_portions(opts.cuts, portions, tree, p, costs));
    }
    return f;
}

std::vector<std::string> decl_names(const Formula& f) {
    std::vector<std::string> out;
    for (const auto& d : f.decls) out.push_back(d.name);
    return out;
}

std::string emit_prefix(const Formula& f, const EmitOptions& opts) {
    std::string s;
    s += "(set-option :produce-models true)\n";
    for (const auto& o : opts.options) s += o + "\n";
    s += "(set-logic QF_LIA)\n";
    for (const auto& d : f.decls) s += "(declare-fun " + d.name + " () " + std::string(to_string(d.type)) + ")\n";
    Section last = Section::Semantics;
    s += "; semantics\n";
    for (const auto& a : f.asserts) {
        if (a.section != last) {
            s += a.section == Section::Timing ? "; timing\n" : "; cuts\n";
            last = a.section;
        }
        s += "(assert " + to_sexpr(a.expr) + ")\n";
    }
    if (opts.with_cuts && !f.cuts.empty()) {
        s += "; cuts\n";
        for (const auto& c : f.cuts) {
            if (c.whole_program) {
                s += "(assert (<= " + f.cost_var + " " + std::to_string(c.bound) + ")) ; " + c.label + "\n";
                continue;
            }
            s += "(assert (= " + c.var + " " + to_sexpr(c.sum) + "))\n";
            s += "(assert (<= " + c.var + " " + std::to_string(c.bound) + ")) ; " + c.label + "\n";
        }
    }
    return s;
}

std::string emit_smtlib(const Formula& f, const std::vector<Expr>& extra, const EmitOptions& opts) {
    std::string s = emit_prefix(f, opts);
    if (!extra.empty()) s += "; query\n";
    for (const auto& e : extra) s += "(assert " + to_sexpr(e) + ")\n";
    if (opts.check_sat) {
        s += "(check-sat)\n";
        auto vars = opts.get_values.empty() ? decl_names(f) : opts.get_values;
        if (!vars.empty()) {
            s += "(get-value (";
            for (std::size_t i = 0; i < vars.size(); ++i) s += (i ? " " : "") + vars[i];
            s += "))\n";
        }
    }
    s += "(exit)\n";
    return s;
}

}  // namespace wcet
