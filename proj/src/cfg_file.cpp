#include "wcet/cfg_file.hpp"

#include <json.hpp>

#include "wcet/error.hpp"

namespace wcet {
namespace {

using json = nlohmann::json;

[[noreturn]] void schema(const std::string& msg) { throw ParseError("schema violation: " + msg); }

const json& field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) schema(where + " lacks '" + key + "'");
    return *it;
}

std::string str(const json& v, const std::string& where) {
    if (!v.is_string()) schema(where + " must be a string");
    return v.get<std::string>();
}

Int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) schema(where + " must be an integer");
    return v.get<Int>();
}

Expr expression(const json& v, const std::string& where) {
    if (v.is_boolean()) return Expr::bool_const(v.get<bool>());
    if (v.is_number_integer()) return Expr::int_const(v.get<Int>());
    if (!v.is_string()) schema(where + " must be an expression string");
    try {
        return parse_prefix(v.get<std::string>());
    } catch (const Error& e) {
        throw ParseError(where + ": " + e.what());
    }
}

Type type_name(const json& v, const std::string& where) {
    std::string s = str(v, where);
    if (s == "Int") return Type::Int;
    if (s == "Bool") return Type::Bool;
    schema(where + " must be \"Int\" or \"Bool\"");
}

}  // namespace

ParsedInput parse_cfg_file(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
    if (!doc.is_object()) schema("document must be an object");

    ParsedInput out;
    Program& p = out.program;
    CostModel& costs = out.costs;
    if (doc.contains("name")) p.name = str(doc["name"], "name");

    const json& blocks = field(doc, "blocks", "document");
    if (!blocks.is_array() || blocks.empty()) schema("'blocks' must be a non-empty array");
    std::map<std::string, BlockId> ids;
    for (const auto& b : blocks) {
        if (!b.is_object()) schema("block entries must be objects");
        std::string id = str(field(b, "id", "block"), "block id");
        if (!ids.emplace(id, static_cast<BlockId>(ids.size())).second) schema("duplicate block id '" + id + "'");
        p.blocks.push_back(Block{});
        p.blocks.back().name = id;
    }
    auto ref = [&](const json& v, const std::string& where) {
        std::string id = str(v, where);
        auto it = ids.find(id);
        if (it == ids.end()) throw ParseError("dangling reference to undeclared block '" + id + "' in " + where);
        return it->second;
    };

    p.entry = doc.contains("entry") ? ref(doc["entry"], "entry") : 0;
    p.exit = doc.contains("exit") ? ref(doc["exit"], "exit") : static_cast<BlockId>(p.blocks.size() - 1);

    // Edges first: costs, and the source for omitted terminators.
    struct ListedEdge {
        BlockId from, to;
        std::optional<Expr> guard;
    };
    std::vector<ListedEdge> listed;
    if (doc.contains("edges")) {
        const json& edges = doc["edges"];
        if (!edges.is_array()) schema("'edges' must be an array");
        for (const auto& e : edges) {
            if (!e.is_object()) schema("edge entries must be objects");
            BlockId from = ref(field(e, "from", "edge"), "edge.from");
            BlockId to = ref(field(e, "to", "edge"), "edge.to");
            std::string where = "edge " + p.blocks[from].name + " -> " + p.blocks[to].name;
            Int c = integer(field(e, "cost", where), where + " cost");
            if (c < 0) throw ParseError("negative cost on " + where);
            if (!costs.edge.emplace(std::make_pair(from, to), c).second) schema("duplicate " + where);
            ListedEdge le{from, to, std::nullopt};
            if (e.contains("guard") && !e["guard"].is_null()) le.guard = expression(e["guard"], where + " guard");
            listed.push_back(std::move(le));
        }
    }

    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const json& b = blocks[i];
        Block& blk = p.blocks[i];
        std::string where = "block '" + blk.name + "'";
        if (b.contains("assigns")) {
            if (!b["assigns"].is_array()) schema(where + " assigns must be an array");
            for (const auto& a : b["assigns"]) {
                if (!a.is_array() || a.size() != 2) schema(where + " assigns must be [var, expr] pairs");
                blk.assigns.push_back(Assign{str(a[0], where + " assign target"), expression(a[1], where)});
            }
        }
        if (b.contains("phis")) {
            if (!b["phis"].is_array()) schema(where + " phis must be an array");
            for (const auto& ph : b["phis"]) {
                Phi phi;
                phi.target = str(field(ph, "target", where + " phi"), where + " phi target");
                const json& srcs = field(ph, "sources", where + " phi");
                if (!srcs.is_array()) schema(where + " phi sources must be an array");
                for (const auto& s : srcs) {
                    if (!s.is_array() || s.size() != 2) schema(where + " phi sources must be [pred, value] pairs");
                    phi.sources.push_back({ref(s[0], where + " phi source"), expression(s[1], where)});
                }
                if (ph.contains("type")) p.types[phi.target] = type_name(ph["type"], where + " phi type");
                blk.phis.push_back(std::move(phi));
            }
        }
        if (b.contains("assumes")) {
            if (!b["assumes"].is_array()) schema(where + " assumes must be an array");
            for (const auto& a : b["assumes"]) blk.assumes.push_back(expression(a, where + " assume"));
        }
        if (b.contains("cost")) {
            Int c = integer(b["cost"], where + " cost");
            if (c < 0) throw ParseError("negative cost on " + where);
            if (c) costs.block[static_cast<BlockId>(i)] = c;
        }
        if (b.contains("term")) {
            const json& t = b["term"];
            if (!t.is_array() || t.empty()) schema(where + " term must be a non-empty array");
            std::string kind = str(t[0], where + " term kind");
            if (kind == "br" && t.size() == 4)
                blk.term = Branch{expression(t[1], where + " branch condition"), ref(t[2], where + " term"),
                                  ref(t[3], where + " term")};
            else if (kind == "goto" && t.size() == 2)
                blk.term = Goto{ref(t[1], where + " term")};
            else if (kind == "ret" && t.size() == 1)
                blk.term = Return{};
            else
                schema(where + " term must be [\"br\",cond,then,else], [\"goto\",b] or [\"ret\"]");
        } else {
            std::vector<const ListedEdge*> outs;
            for (const auto& le : listed)
                if (le.from == i) outs.push_back(&le);
            if (outs.empty()) {
                blk.term = Return{};
            } else if (outs.size() == 1) {
                blk.term = Goto{outs[0]->to};
            } else if (outs.size() == 2) {
                if (!outs[0]->guard) schema(where + " has two out-edges but no term and no guard");
                blk.term = Branch{*outs[0]->guard, outs[0]->to, outs[1]->to};
            } else {
                schema(where + " has more than two out-edges");
            }
        }
    }

    if (doc.contains("havocs")) {
        if (!doc["havocs"].is_array()) schema("'havocs' must be an array");
        for (const auto& h : doc["havocs"]) {
            HavocVar v;
            v.name = str(field(h, "name", "havoc"), "havoc name");
            std::string where = "havoc '" + v.name + "'";
            if (h.contains("type")) v.type = type_name(h["type"], where + " type");
            if (h.contains("lo") && !h["lo"].is_null()) v.lo = integer(h["lo"], where + " lo");
            if (h.contains("hi") && !h["hi"].is_null()) v.hi = integer(h["hi"], where + " hi");
            if (v.lo && v.hi && *v.lo > *v.hi) throw ParseError(where + " has lo > hi");
            v.block = h.contains("block") ? ref(h["block"], where + " block") : p.entry;
            p.inputs.push_back(v);
        }
    }
    if (doc.contains("loops")) {
        for (const auto& l : doc["loops"]) {
            BlockId hdr = ref(field(l, "header", "loop"), "loop header");
            Int k = integer(field(l, "bound", "loop"), "loop bound");
            if (k < 0) schema("loop bound must be nonnegative");
            p.loop_bounds[hdr] = k;
        }
    }

    p.finalize();
    for (const Edge& e : p.edges()) {
        if (!costs.edge.count({e.from, e.to}))
            schema("edge " + p.blocks[e.from].name + " -> " + p.blocks[e.to].name + " is not listed in 'edges'");
    }
    for (const auto& le : listed) {
        auto id = p.find_edge(le.from, le.to);
        std::string where = "edge " + p.blocks[le.from].name + " -> " + p.blocks[le.to].name;
        if (!id) schema(where + " does not follow any terminator");
        if (le.guard && *le.guard != p.edges()[*id].guard)
            schema(where + " guard disagrees with the terminator");
    }

    if (doc.contains("cost_convention")) {
        costs.convention = str(doc["cost_convention"], "cost_convention");
    } else {
        bool any_edge = std::any_of(costs.edge.begin(), costs.edge.end(), [](const auto& kv) { return kv.second; });
        costs.convention = costs.has_block_costs() ? (any_edge ? "edge+block" : "block") : "edge";
    }

    infer_types(p);
    validate_program(p, false);
    return out;
}

std::string emit_cfg_file(const Program& p, const CostModel& costs) {
    json doc;
    doc["name"] = p.name;
    doc["entry"] = p.blocks[p.entry].name;
    doc["exit"] = p.blocks[p.exit].name;
    doc["cost_convention"] = costs.convention;
    json havocs = json::array();
    for (const auto& h : p.inputs) {
        json v;
        v["name"] = h.name;
        v["type"] = std::string(to_string(h.type));
        if (h.lo) v["lo"] = *h.lo;
        if (h.hi) v["hi"] = *h.hi;
        v["block"] = p.blocks[h.block].name;
        havocs.push_back(v);
    }
    doc["havocs"] = havocs;
    json blocks = json::array();
    for (BlockId b = 0; b < p.num_blocks(); ++b) {
        const Block& blk = p.blocks[b];
        json o;
        o["id"] = blk.name;
        json assigns = json::array();
        for (const auto& a : blk.assigns) assigns.push_back({a.var, to_sexpr(a.value)});
        o["assigns"] = assigns;
        json phis = json::array();
        for (const auto& ph : blk.phis) {
            json srcs = json::array();
            for (const auto& [src, v] : ph.sources) srcs.push_back({p.blocks[src].name, to_sexpr(v)});
            json phi{{"target", ph.target}, {"sources", srcs}};
            if (auto t = p.type_of_var(ph.target)) phi["type"] = std::string(to_string(*t));
            phis.push_back(phi);
        }
        o["phis"] = phis;
        if (!blk.assumes.empty()) {
            json as = json::array();
            for (const auto& a : blk.assumes) as.push_back(to_sexpr(a));
            o["assumes"] = as;
        }
        if (const auto* br = std::get_if<Branch>(&blk.term))
            o["term"] = {"br", to_sexpr(br->cond), p.blocks[br->then_target].name, p.blocks[br->else_target].name};
        else if (const auto* g = std::get_if<Goto>(&blk.term))
            o["term"] = {"goto", p.blocks[g->target].name};
        else
            o["term"] = {"ret"};
        if (Int c = costs.block_cost(b)) o["cost"] = c;
        blocks.push_back(o);
    }
    doc["blocks"] = blocks;
    json edges = json::array();
    for (const Edge& e : p.edges()) {
        json o{{"from", p.blocks[e.from].name}, {"to", p.blocks[e.to].name}, {"cost", costs.edge_cost(p, e.id)}};
        if (!e.guard.is_true()) o["guard"] = to_sexpr(e.guard);
        edges.push_back(o);
    }
    doc["edges"] = edges;
    if (!p.loop_bounds.empty()) {
        json loops = json::array();
        for (const auto& [h, k] : p.loop_bounds) loops.push_back({{"header", p.blocks[h].name}, {"bound", k}});
        doc["loops"] = loops;
    }
    return doc.dump(2) + "\n";
}

}  // namespace wcet
