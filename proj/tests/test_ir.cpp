#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "wcet/cfg_file.hpp"
#include "wcet/error.hpp"
#include "wcet/minilang.hpp"
#include "wcet/sexpr.hpp"
#include "wcet/solve.hpp"
#include "wcet/unroll.hpp"

using namespace wcet;
using namespace wcet::test;

namespace {

std::vector<std::string> block_names(const Program& p) {
    std::vector<std::string> out;
    for (const auto& b : p.blocks) out.push_back(b.name);
    return out;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

Int brute_max(const Program& p, const CostModel& c) {
    auto space = input_space(p);
    REQUIRE(space);
    auto r = brute_wcet(p, c, *space);
    REQUIRE(r.wcet);
    return *r.wcet;
}

}  // namespace

TEST_CASE("expressions print, parse and evaluate") {
    Expr e = Expr::add(Expr::var("call"), Expr::int_const(10));
    CHECK(to_sexpr(e) == "(+ call 10)");
    CHECK(parse_prefix("(+ call 10)") == e);
    CHECK(to_sexpr(Expr::int_const(-5)) == "(- 5)");
    CHECK(parse_prefix("-5") == Expr::int_const(-5));
    CHECK(is_linear(Expr::mul(Expr::int_const(3), Expr::var("x"))));
    CHECK_FALSE(is_linear(Expr::mul(Expr::var("y"), Expr::var("x"))));

    Model m{{"x", Int{5}}, {"y", Int{-5}}, {"b", true}};
    CHECK(eval_in_model(m, Expr::add(Expr::var("x"), Expr::var("y"))) == Value{Int{0}});
    CHECK(eval_in_model(m, Expr::ite(Expr::var("b"), Expr::int_const(2), Expr::int_const(3))) == Value{Int{2}});
    CHECK_THROWS_AS(eval_in_model(m, Expr::var("nope")), Error);
}

TEST_CASE("sexpr reader keeps quoted symbols and reports positions") {
    auto xs = parse_sexprs("(a |b c| \"s\") x");
    REQUIRE(xs.size() == 2);
    CHECK(xs[0].items[1].atom == "|b c|");
    CHECK(xs[1].is_symbol("x"));
    CHECK_THROWS_AS(parse_sexpr("(a (b)"), ParseError);
}

TEST_CASE("straight-line mini-language program is one block") {
    auto in = parse_minilang("x = 1; return;");
    CHECK(in.program.num_blocks() == 1);
    CHECK(in.program.edges().empty());
    CHECK(in.costs.convention == "instruction-count");
}

TEST_CASE("rate limiter listing gives the five clang-named blocks") {
    auto in = parse_minilang(slurp(source_path("data/rate_limiter.wcl")));
    const Program& p = in.program;
    CHECK(block_names(p) == std::vector<std::string>{"entry", "if.then", "if.end", "if.then4", "if.end6"});
    CHECK(p.edges().size() == 6);
    CHECK_FALSE(check_loop_free(p));
    // x.0 merges add2 and call1, x.1 merges sub5 and x.0
    REQUIRE(p.blocks[2].phis.size() == 1);
    CHECK(p.blocks[2].phis[0].target == "x.0");
    REQUIRE(p.blocks[4].phis.size() == 1);
    CHECK(p.blocks[4].phis[0].target == "x.1");
    for (BlockId b = 0; b < p.num_blocks(); ++b)
        for (const auto& ph : p.blocks[b].phis) CHECK(ph.sources.size() == p.in_edges(b).size());
}

TEST_CASE("mini-language errors carry positions") {
    std::string msg = error_of([] { parse_minilang("if (b) { x = "); });
    CHECK(msg.find("end of input") != std::string::npos);
    msg = error_of([] { parse_minilang("x = 1;\ny = z + 1; return;"); });
    CHECK(msg.find("2:") == 0);
    CHECK(msg.find("undefined variable 'z'") != std::string::npos);
    msg = error_of([] { parse_minilang("x = nondet(0, 5);\nif (x) { x = 1; }\nreturn;"); });
    CHECK(msg.find("type error") != std::string::npos);
}

TEST_CASE("non-linear arithmetic is rejected unless havoc-abstracted") {
    const char* src = "a = nondet(0, 9); b = nondet(0, 9); c = a * b; return;";
    std::string msg = error_of([&] { parse_minilang(src); });
    CHECK(msg.find("unsupported construct") != std::string::npos);
    auto in = parse_minilang(src, MinilangOptions{true});
    REQUIRE(in.program.find_input("mul") != nullptr);
    CHECK_FALSE(in.program.find_input("mul")->lo.has_value());
}

TEST_CASE("cfg document round-trips") {
    auto in = parse_cfg_file(slurp(source_path("data/rate_limiter.cfg.json")));
    CHECK(in.program.num_blocks() == 5);
    CHECK(in.costs.edge.at({0, 1}) == 15);
    CHECK(in.costs.edge.at({2, 3}) == 12);
    auto back = parse_cfg_file(emit_cfg_file(in.program, in.costs));
    CHECK(block_names(back.program) == block_names(in.program));
    REQUIRE(back.program.edges().size() == in.program.edges().size());
    for (std::size_t i = 0; i < in.program.edges().size(); ++i) {
        const Edge& a = in.program.edges()[i];
        const Edge& b = back.program.edges()[i];
        CHECK(a.from == b.from);
        CHECK(a.to == b.to);
        CHECK(a.guard == b.guard);
    }
    CHECK(back.costs.edge == in.costs.edge);
    CHECK(emit_cfg_file(back.program, back.costs) == emit_cfg_file(in.program, in.costs));
}

TEST_CASE("cfg document errors") {
    const std::string head = R"({"name":"t","entry":"a","exit":"b","blocks":[{"id":"a","term":["goto","b"]},{"id":"b","term":["ret"]}],)";
    CHECK(error_of([&] { parse_cfg_file(head + R"("edges":[{"from":"a","to":"bX","cost":1}]})"); })
              .find("dangling reference") != std::string::npos);
    CHECK(error_of([&] { parse_cfg_file(head + R"("edges":[{"from":"a","to":"b","cost":-1}]})"); })
              .find("negative cost") != std::string::npos);
    CHECK(error_of([] { parse_cfg_file(R"({"name":"t","entry":"a","exit":"a","blocks":[],"edges":[]})"); })
              .find("schema violation") != std::string::npos);
    CHECK_THROWS_AS(parse_cfg_file("{"), ParseError);
    const std::string dup = R"({"name":"t","entry":"a","exit":"b","blocks":[
        {"id":"a","assigns":[["x","1"]],"term":["goto","b"]},
        {"id":"b","assigns":[["x","2"]],"term":["ret"]}],
        "edges":[{"from":"a","to":"b","cost":1}]})";
    CHECK_THROWS_AS(parse_cfg_file(dup), Error);
}

TEST_CASE("loop-free check") {
    auto rl = parse_cfg_file(slurp(source_path("data/rate_limiter.cfg.json")));
    CHECK_FALSE(check_loop_free(rl.program));

    Program ab;
    ab.blocks.resize(3);
    ab.blocks[0].name = "E";
    ab.blocks[1].name = "A";
    ab.blocks[2].name = "B";
    ab.blocks[0].term = Goto{1};
    ab.blocks[1].term = Goto{2};
    ab.blocks[2].term = Goto{1};
    ab.finalize();
    auto cyc = check_loop_free(ab);
    REQUIRE(cyc);
    std::set<BlockId> got(cyc->blocks.begin(), cyc->blocks.end());
    CHECK(got == std::set<BlockId>{1, 2});

    Program one;
    one.blocks.resize(1);
    one.finalize();
    CHECK_FALSE(check_loop_free(one));
}

TEST_CASE("unroll is the identity on loop-free programs") {
    auto in = parse_cfg_file(slurp(source_path("data/rate_limiter.cfg.json")));
    auto u = unroll(in.program);
    CHECK(block_names(u.program) == block_names(in.program));
    CHECK(u.program.edges().size() == in.program.edges().size());
    CHECK(u.remap_costs(in.costs).edge == in.costs.edge);
}

TEST_CASE("for loop unrolls into sequenced copies") {
    auto in = parse_minilang("x = nondet(0, 5);\nfor i in 0..3 { x = x + 1; cost 4; }\nreturn;");
    auto u = unroll(in.program);
    CHECK_FALSE(check_loop_free(u.program));
    int bodies = 0;
    for (const auto& b : u.program.blocks) bodies += b.name.rfind("for.body@", 0) == 0;
    CHECK(bodies == 3);
    CostModel c = u.remap_costs(in.costs);
    // the same body cost, counted by execution before and after unrolling
    CHECK(brute_max(u.program, c) == 3 * 4);
}

TEST_CASE("unbounded loop needs a default bound") {
    const char* src = "x = 0;\nbool b = nondet();\nwhile (b) { x = x + 1; b = nondet(); }\nreturn;";
    auto in = parse_minilang(src);
    std::string msg = error_of([&] { unroll(in.program); });
    CHECK(msg.find("unbounded loop") != std::string::npos);
    auto u = unroll(in.program, UnrollOptions{2});
    CHECK_FALSE(check_loop_free(u.program));
    CHECK(error_of([&] { unroll(in.program, UnrollOptions{5000}); }).find("unroll limit") != std::string::npos);
}

TEST_CASE("validation rejects use before definition") {
    auto in = parse_cfg_file(slurp(source_path("data/rate_limiter.cfg.json")));
    Program p = in.program;
    // sub5 read in the entry block, which if.then4 does not dominate
    p.blocks[0].assigns.push_back(Assign{"bad", Expr::var("sub5")});
    p.types["bad"] = Type::Int;
    CHECK_THROWS_AS(validate_program(p), Error);
}
