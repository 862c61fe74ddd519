#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "support.hpp"
#include "wcet/bench.hpp"
#include "wcet/cfg_file.hpp"
#include "wcet/encode.hpp"
#include "wcet/error.hpp"
#include "wcet/omt.hpp"
#include "wcet/solve.hpp"

using namespace wcet;
using namespace wcet::test;

namespace {

SolverConfig fake(const std::string& script, int timeout_ms = 5000) {
    SolverConfig c;
    c.command = {source_path("tests/fixtures/" + script)};
    c.timeout_ms = timeout_ms;
    return c;
}

SolverConfig z3(int timeout_ms = 10000) {
    SolverConfig c = default_solver_config();
    c.timeout_ms = timeout_ms;
    return c;
}

// Diamond without cuts, asked for one more than the maximum: slow to refute.
std::string hard_script(int n, bool cuts) {
    auto in = gen_diamond(DiamondSpec{n, DiamondShape::PerFragment});
    Formula f = encode(in.program, in.costs, EncodingOptions{CostEncoding::Sum, cuts ? CutMode::Leaves : CutMode::None});
    EmitOptions eo;
    eo.options = z3().options;
    eo.get_values = {"cost"};
    return emit_smtlib(f, {Expr::ge(Expr::var("cost"), Expr::int_const(5 * n + 1))}, eo);
}

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TEST_CASE("model parsing") {
    Model m;
    parse_model("((x 1) (b true) (y (- 2)) (|q r| false))", m);
    CHECK(m.at("x") == Value{Int{1}});
    CHECK(m.at("b") == Value{true});
    CHECK(m.at("y") == Value{Int{-2}});
    CHECK(m.at("q r") == Value{false});

    Model d;
    parse_model("(model (define-fun x () Int (- 3)) (define-fun b () Bool false))", d);
    CHECK(d.at("x") == Value{Int{-3}});
    CHECK(d.at("b") == Value{false});
    Model bare;
    parse_model("((define-fun z () Int 4))", bare);
    CHECK(bare.at("z") == Value{Int{4}});

    Model bad;
    CHECK_THROWS_AS(parse_model("((x 1.5))", bad), Error);
    CHECK_THROWS_AS(parse_model("((x", bad), Error);
}

TEST_CASE("split_command") {
    CHECK(split_command("  z3   -in ") == std::vector<std::string>{"z3", "-in"});
    CHECK(split_command("").empty());
}

TEST_CASE("trivial scripts") {
    CHECK(check("(assert false)(check-sat)", z3()).kind == Verdict::Unsat);
    Verdict v = check("(declare-fun x () Int)(assert (> x 4))(assert (< x 6))(check-sat)(get-value (x))", z3());
    REQUIRE(v.kind == Verdict::Sat);
    CHECK(v.model.at("x") == Value{Int{5}});
}

TEST_CASE("rate limiter with cuts: 36 reachable, 37 not") {
    auto in = parse_cfg_file(slurp(source_path("data/rate_limiter_printed.cfg.json")));
    Formula f = encode(in.program, in.costs, EncodingOptions{});
    EmitOptions eo;
    eo.options = z3().options;
    auto ask = [&](Int m) { return check(emit_smtlib(f, {Expr::ge(Expr::var("cost"), Expr::int_const(m))}, eo), z3()); };
    CHECK(ask(37).kind == Verdict::Unsat);
    Verdict v = ask(36);
    REQUIRE(v.kind == Verdict::Sat);
    CHECK(v.model.at("cost") == Value{Int{36}});
    // two runs cost 36: through if.then only, or through if.then4 only
    bool first = v.model.at("t_0_1") == Value{true} && v.model.at("t_2_4") == Value{true};
    bool second = v.model.at("t_0_2") == Value{true} && v.model.at("t_2_3") == Value{true};
    CHECK(first != second);
    for (const auto& e : f.all_assertions()) CHECK(eval_in_model(v.model, e) == Value{true});
}

TEST_CASE("timeouts kill the solver") {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v = check(hard_script(24, false), z3(200));
    CHECK(v.kind == Verdict::Timeout);
    CHECK(since(t0) < 5000);

    t0 = std::chrono::steady_clock::now();
    v = check("(check-sat)", fake("sleepy_solver.sh", 100));
    CHECK(v.kind == Verdict::Timeout);
    CHECK(since(t0) < 5000);
}

TEST_CASE("cuts make the same query quick") {
    Verdict v = check(hard_script(24, true), z3(20000));
    CHECK(v.kind == Verdict::Unsat);
}

TEST_CASE("solver failures are reported, not thrown") {
    SolverConfig missing;
    missing.command = {"/nonexistent/solver-binary"};
    Verdict v = check("(check-sat)", missing);
    CHECK(v.kind == Verdict::SolverError);
    CHECK(v.reason.find("solver-binary") != std::string::npos);

    v = check("(check-sat)", fake("error_solver.sh"));
    CHECK(v.kind == Verdict::SolverError);
    CHECK(v.reason.find("unknown constant foo") != std::string::npos);
    CHECK(v.reason.find("boom") != std::string::npos);

    v = check("(check-sat)", fake("silent_solver.sh"));
    CHECK(v.kind == Verdict::SolverError);
    CHECK(v.reason.find("exit status 3") != std::string::npos);

    CHECK(check("(check-sat)", fake("garbage_solver.sh")).kind == Verdict::SolverError);

    v = check("(check-sat)", fake("unknown_solver.sh"));
    CHECK(v.kind == Verdict::Unknown);
    CHECK_FALSE(v.decisive());

    // a solver that ignores its input still gets reaped
    std::string big(1 << 20, ' ');
    CHECK(check(big + "(check-sat)", fake("deaf_solver.sh")).kind == Verdict::Unsat);

    v = check("(check-sat)", fake("model_solver.sh"));
    REQUIRE(v.kind == Verdict::Sat);
    CHECK(v.model.at("x") == Value{Int{-3}});
}

TEST_CASE("sessions answer queries and restart after a timeout") {
    auto in = gen_diamond(DiamondSpec{24, DiamondShape::PerFragment});
    Formula f = encode(in.program, in.costs, EncodingOptions{CostEncoding::Sum, CutMode::None});
    SolverConfig cfg = z3(300);
    cfg.incremental = true;
    EmitOptions eo;
    eo.options = cfg.options;
    SolverSession s(cfg, emit_prefix(f, eo));
    Verdict a = s.query({"(>= cost 100)"}, {"cost"});
    REQUIRE(a.kind == Verdict::Sat);
    CHECK(std::get<Int>(a.model.at("cost")) >= 100);
    CHECK(s.query({"(>= cost 121)"}, {}).kind == Verdict::Timeout);
    CHECK(s.starts() == 1);
    Verdict b = s.query({"(>= cost 120)"}, {"cost"});
    CHECK(b.kind == Verdict::Sat);
    CHECK(s.starts() == 2);
}

TEST_CASE("permanent assertions survive later queries") {
    auto in = parse_cfg_file(slurp(source_path("data/rate_limiter.cfg.json")));
    Formula f = encode(in.program, in.costs, EncodingOptions{CostEncoding::Sum, CutMode::None});
    SolverConfig cfg = z3(10000);
    cfg.incremental = true;
    EmitOptions eo;
    eo.options = cfg.options;
    SolverSession s(cfg, emit_prefix(f, eo));
    CHECK(s.query({"(>= cost 32)"}, {}).kind == Verdict::Sat);
    s.add_permanent("(< cost 32)");
    CHECK(s.query({"(>= cost 32)"}, {}).kind == Verdict::Unsat);
    // the 25-cycle run skips both limiters
    Verdict v = s.query({"(>= cost 25)"}, {"cost"});
    REQUIRE(v.kind == Verdict::Sat);
    CHECK(v.model.at("cost") == Value{Int{25}});
    CHECK(s.starts() == 1);
}

TEST_CASE("sessions report a missing solver") {
    SolverConfig missing;
    missing.command = {"/nonexistent/solver-binary"};
    SolverSession s(missing, "");
    CHECK(s.query({"true"}, {}).kind == Verdict::SolverError);
}

TEST_CASE("concurrent one-shot checks") {
    std::vector<Verdict::Kind> got(8);
#pragma omp parallel for num_threads(4)
    for (int i = 0; i < 8; ++i)
        got[i] = check(i % 2 ? "(assert false)(check-sat)" : "(check-sat)", z3()).kind;
    for (int i = 0; i < 8; ++i) CHECK(got[i] == (i % 2 ? Verdict::Unsat : Verdict::Sat));
}
