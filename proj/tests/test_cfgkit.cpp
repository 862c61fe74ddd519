#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "wcet/cfg_file.hpp"
#include "wcet/cfgkit.hpp"
#include "wcet/error.hpp"

using namespace wcet;
using namespace wcet::test;

namespace {

ParsedInput load(const std::string& rel) { return parse_cfg_file(slurp(source_path(rel))); }

// Blocks in a chain or diamond, every edge cost 1.
ParsedInput shape(const std::vector<std::vector<BlockId>>& succ) {
    Program p;
    CostModel c;
    for (std::size_t i = 0; i < succ.size(); ++i) {
        Block b;
        b.name = std::string(1, static_cast<char>('A' + i));
        if (succ[i].size() == 2) {
            std::string v = "g" + std::to_string(i);
            p.inputs.push_back(HavocVar{v, Type::Bool, std::nullopt, std::nullopt, static_cast<BlockId>(i)});
            p.types[v] = Type::Bool;
            b.term = Branch{Expr::var(v), succ[i][0], succ[i][1]};
        } else if (succ[i].size() == 1) {
            b.term = Goto{succ[i][0]};
        }
        p.blocks.push_back(b);
        for (BlockId s : succ[i]) c.edge[{static_cast<BlockId>(i), s}] = 1;
    }
    p.exit = static_cast<BlockId>(succ.size() - 1);
    p.finalize();
    return {p, c};
}

std::set<std::string> edge_names(const Program& p, const std::vector<EdgeId>& es) {
    std::set<std::string> out;
    for (EdgeId e : es) out.insert(edge_var(p.edges()[e].from, p.edges()[e].to));
    return out;
}

// Longest cost over structural paths from `from` to `to` restricted to a portion.
Int brute_portion_bound(const Program& p, const CostModel& c, const Portion& portion) {
    std::set<BlockId> blocks(portion.blocks.begin(), portion.blocks.end());
    Int best = 0;
    for (const auto& path : all_paths(p))
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (path[i] != portion.header) continue;
            Int t = 0;
            for (std::size_t j = i; j + 1 < path.size(); ++j) {
                t += c.edge.at({path[j], path[j + 1]});
                if (blocks.count(path[j + 1])) t += c.block_cost(path[j + 1]);
                if (path[j + 1] == portion.merge) {
                    best = std::max(best, t);
                    break;
                }
            }
        }
    return best;
}

}  // namespace

TEST_CASE("topological order") {
    auto rl = load("data/rate_limiter.cfg.json");
    auto order = topo_order(rl.program);
    std::vector<std::string> names;
    for (BlockId b : order) names.push_back(rl.program.blocks[b].name);
    CHECK(names == std::vector<std::string>{"entry", "if.then", "if.end", "if.then4", "if.end6"});

    CHECK(topo_order(shape({{}}).program) == std::vector<BlockId>{0});
    CHECK(topo_order(shape({{1, 2}, {3}, {3}, {}}).program) == std::vector<BlockId>{0, 1, 2, 3});
}

TEST_CASE("immediate dominators on small shapes") {
    auto diamond = shape({{1, 2}, {3}, {3}, {}});
    auto dt = immediate_dominators(diamond.program);
    CHECK(dt.idom == std::vector<BlockId>{0, 0, 0, 0});
    auto chain = shape({{1}, {2}, {}});
    CHECK(immediate_dominators(chain.program).idom == std::vector<BlockId>{0, 0, 1});
}

TEST_CASE("unreachable block is an error") {
    auto p = shape({{2}, {2}, {}}).program;
    CHECK_THROWS_AS(immediate_dominators(p), Error);
}

TEST_CASE("two-portion example nests") {
    auto in = load("data/two_portions.cfg.json");
    const Program& p = in.program;
    auto dt = immediate_dominators(p);
    auto id = [&](const char* n) { return *p.find_block(n); };
    CHECK(dt.idom[id("block5")] == id("decision2"));
    CHECK(dt.idom[id("block7")] == id("decision1"));
    auto portions = find_portions(p, dt);
    REQUIRE(portions.size() == 2);
    const Portion& outer = portions[0];
    const Portion& inner = portions[1];
    CHECK(outer.header == id("decision1"));
    CHECK(outer.merge == id("block7"));
    CHECK(inner.header == id("decision2"));
    CHECK(inner.merge == id("block5"));
    CHECK(std::includes(outer.edges.begin(), outer.edges.end(), inner.edges.begin(), inner.edges.end()));
}

TEST_CASE("rate limiter portions and bounds") {
    auto in = load("data/rate_limiter.cfg.json");
    const Program& p = in.program;
    auto portions = find_portions(p, immediate_dominators(p));
    REQUIRE(portions.size() == 2);
    CHECK(edge_names(p, portions[0].edges) == std::set<std::string>{"t_0_1", "t_1_2", "t_0_2"});
    CHECK(edge_names(p, portions[1].edges) == std::set<std::string>{"t_2_3", "t_3_4", "t_2_4"});
    compute_bounds(portions, p, in.costs);
    CHECK(portions[0].bound == 21);
    CHECK(portions[1].bound == 18);
    CHECK(syntactic_bound(p, in.costs) == 39);
    CHECK(brute_syntactic_bound(p, in.costs) == 39);

    auto printed = load("data/rate_limiter_printed.cfg.json");
    auto pp = find_portions(printed.program, immediate_dominators(printed.program));
    compute_bounds(pp, printed.program, printed.costs);
    CHECK(pp[0].bound == 21);
    CHECK(pp[1].bound == 22);
    CHECK(syntactic_bound(printed.program, printed.costs) == 43);
}

TEST_CASE("no merges, no portions") {
    auto chain = shape({{1}, {2}, {}});
    CHECK(find_portions(chain.program, immediate_dominators(chain.program)).empty());
    CHECK(syntactic_bound(chain.program, chain.costs) == 2);
}

TEST_CASE("grouping by two") {
    // four diamonds in sequence
    std::vector<std::vector<BlockId>> s;
    for (BlockId d = 0; d < 4; ++d) {
        BlockId h = static_cast<BlockId>(s.size());
        s.push_back({h + 1, h + 2});
        s.push_back({h + 3});
        s.push_back({h + 3});
    }
    s.push_back({});
    auto in = shape(s);
    auto portions = find_portions(in.program, immediate_dominators(in.program));
    REQUIRE(portions.size() == 4);
    auto tree = group_portions(portions, in.program);
    CHECK(tree.num_leaves == 4);
    REQUIRE(tree.nodes.size() == 7);
    CHECK(tree.children[4] == std::pair<int, int>{0, 1});
    CHECK(tree.children[5] == std::pair<int, int>{2, 3});
    CHECK(tree.children[6] == std::pair<int, int>{4, 5});
    CHECK(tree.root == 6);
    CHECK(tree.nodes[6].whole_program);
    CHECK(tree.nodes[6].edges.size() == in.program.edges().size());
    for (int i = 4; i < 7; ++i) {
        auto [l, r] = tree.children[i];
        std::vector<EdgeId> both;
        std::set_intersection(tree.nodes[l].edges.begin(), tree.nodes[l].edges.end(), tree.nodes[r].edges.begin(),
                              tree.nodes[r].edges.end(), std::back_inserter(both));
        CHECK(both.empty());
    }
    compute_bounds(tree, in.program, in.costs);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tree.nodes[6].bound >= tree.nodes[i].bound);
    CHECK(tree.nodes[6].bound == 8);

    auto rl = load("data/rate_limiter.cfg.json");
    auto t3 = group_portions(find_portions(rl.program, immediate_dominators(rl.program)), rl.program);
    REQUIRE(t3.nodes.size() == 3);
    CHECK(t3.nodes[2].whole_program);

    auto single = shape({{1, 2}, {3}, {3}, {}});
    auto t1 = group_portions(find_portions(single.program, immediate_dominators(single.program)), single.program);
    CHECK(t1.nodes.size() == 1);
}

TEST_CASE("dominators and bounds agree with brute force on random DAGs") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        auto [p, c] = random_dag(seed);
        CAPTURE(seed);
        auto dt = immediate_dominators(p);
        for (BlockId b = 0; b < p.num_blocks(); ++b) {
            CHECK(dt.idom[b] == brute_idom(p, b));
            for (BlockId d = 0; d < p.num_blocks(); ++d) CHECK(dt.dominates(d, b) == brute_dominates(p, d, b));
        }
        CHECK(syntactic_bound(p, c) == brute_syntactic_bound(p, c));
        auto portions = find_portions(p, dt);
        compute_bounds(portions, p, c);
        for (const auto& portion : portions) CHECK(portion.bound == brute_portion_bound(p, c, portion));
    }
}

TEST_CASE("parallel bounds match the serial reference") {
    for (std::uint64_t seed = 300; seed < 340; ++seed) {
        auto [p, c] = random_dag(seed);
        auto a = find_portions(p, immediate_dominators(p));
        auto tree = group_portions(a, p);
        auto b = a;
        compute_bounds(a, p, c);
        compute_bounds_serial(b, p, c);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].bound == b[i].bound);
        auto t2 = tree;
        compute_bounds(tree, p, c);
        compute_bounds_serial(t2.nodes, p, c);
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) CHECK(tree.nodes[i].bound == t2.nodes[i].bound);
    }
}

TEST_CASE("structure dump matches the golden file") {
    for (const char* name : {"rate_limiter", "two_portions"}) {
        auto in = load(std::string("data/") + name + ".cfg.json");
        const Program& p = in.program;
        auto dt = immediate_dominators(p);
        auto portions = find_portions(p, dt);
        compute_bounds(portions, p, in.costs);
        auto tree = group_portions(portions, p);
        compute_bounds(tree, p, in.costs);
        CHECK(dump_structure(p, dt, portions, tree) == slurp(source_path(std::string("tests/golden/") + name + ".dump.txt")));
    }
}
