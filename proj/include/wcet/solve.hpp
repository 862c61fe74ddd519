#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wcet/expr.hpp"

namespace wcet {

namespace detail {
struct SolverProc;
}

struct SolverConfig {
    /// Executable and arguments; the script is written to its stdin.
    std::vector<std::string> command;
    /// Wall-clock budget per query.
    int timeout_ms = 10000;
    /// Keep one solver process and use push/pop between queries.
    bool incremental = false;
    /// Raw SMT-LIB lines sent before set-logic.
    std::vector<std::string> options;
};

/// Solver from the WCET_SMT_SOLVER environment variable (a command line),
/// else `z3 -in`. For z3, the `smt` tactic is selected: z3's default QF_LIA
/// tactic does not benefit from redundant cut constraints.
SolverConfig default_solver_config();

/// Splits a command line on whitespace.
std::vector<std::string> split_command(const std::string& line);

using Model = std::map<std::string, Value>;

struct Verdict {
    enum Kind { Sat, Unsat, Unknown, Timeout, SolverError };
    Kind kind = SolverError;
    Model model;
    /// Unknown reason or error diagnostic (includes captured stderr).
    std::string reason;
    double elapsed_ms = 0;

    bool decisive() const { return kind == Sat || kind == Unsat; }
};

std::string_view to_string(Verdict::Kind k);

/// Runs `script` in a fresh solver process. The process is always reaped.
Verdict check(const std::string& script, const SolverConfig& cfg);

/// Parses a get-value response `((x 1) (b true) (y (- 2)))` or a model
/// made of define-fun forms into `out`. Throws wcet::Error("solve").
void parse_model(const std::string& text, Model& out);

/// Evaluates `term` in `m`. Throws wcet::Error on unbound variables.
Value eval_in_model(const Model& m, const Expr& term);

/// A long-lived solver process fed incrementally.
///
/// `prefix` (declarations and base assertions) is sent once. Each query runs
/// between push and pop. After a timeout the process is killed and the next
/// query starts a fresh one from the prefix and the permanent assertions.
class SolverSession {
public:
    SolverSession(SolverConfig cfg, std::string prefix);
    ~SolverSession();
    SolverSession(const SolverSession&) = delete;
    SolverSession& operator=(const SolverSession&) = delete;

    /// Adds an assertion that stays for all later queries.
    void add_permanent(const std::string& smt);

    /// Asserts `assertions` in a scope, checks, and fetches `values` on sat.
    Verdict query(const std::vector<std::string>& assertions, const std::vector<std::string>& values);

    /// Number of solver processes started so far.
    int starts() const { return starts_; }

private:
    void start();
    void stop();

    SolverConfig cfg_;
    std::string prefix_;
    std::vector<std::string> permanent_;
    std::unique_ptr<detail::SolverProc> proc_;
    std::string pending_init_;
    int starts_ = 0;
};

}  // namespace wcet
