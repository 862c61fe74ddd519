#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wcet/cfgkit.hpp"
#include "wcet/encode.hpp"
#include "wcet/program.hpp"
#include "wcet/solve.hpp"
#include "wcet/unroll.hpp"

namespace wcet {

/// One satisfiability query of the search: is `target >= m` possible?
struct QueryTrace {
    std::string target;
    Int m = 0;
    Verdict::Kind verdict = Verdict::SolverError;
    double elapsed_ms = 0;
};

/// Interval [lo, hi] around the maximum of the searched variable.
struct SearchState {
    Int lo = -1;  // greatest value witnessed, -1 before the first model
    Int hi = 0;   // current sound upper bound
    std::optional<Model> best_model;
    int queries = 0;
    double elapsed_ms = 0;
    std::vector<QueryTrace> trace;
};

struct WitnessPath {
    std::vector<BlockId> blocks;
    std::vector<EdgeId> edges;
    std::map<std::string, Value> inputs;
    Int cost = 0;
};

enum class Outcome {
    Exact,       // every query was decisive; wcet is the maximum
    UpperBound,  // the solver gave up; wcet is a safe bound only
    Infeasible,  // no execution satisfies the semantics
};

std::string_view to_string(Outcome o);

struct CutBound {
    std::size_t portion_id = 0;
    std::string label;
    Int bound = 0;
    /// False when the value is a syntactic fallback rather than an optimum.
    bool optimized = false;
};

struct OptimizationResult {
    Outcome outcome = Outcome::Exact;
    Int wcet = 0;
    /// wcet is the exact maximum (no indecisive verdict on the way).
    bool sound = true;
    std::optional<WitnessPath> witness;
    Int syntactic_bound = 0;
    SearchState stats;
    std::vector<CutBound> per_cut_bounds;
};

struct OmtOptions {
    SolverConfig solver;
    /// Re-evaluate every assertion under each model.
    bool validate_models = true;
    std::function<void(const QueryTrace&)> on_query;
};

/// Answers `var >= m` queries over a formula, one process per query or one
/// incremental session, depending on the solver config.
class Querier {
public:
    Querier(const Formula& f, OmtOptions opts);
    ~Querier();

    Verdict ask(const Expr& query, const std::string& target, Int m);
    /// Strengthens cut `index` of the formula to `bound`.
    void tighten_cut(std::size_t index, Int bound);
    const Formula& formula() const { return f_; }
    int queries() const { return queries_; }

private:
    void validate(const Model& m, const Expr& query) const;

    Formula f_;
    OmtOptions opts_;
    std::vector<std::string> values_;
    std::unique_ptr<SolverSession> session_;
    int queries_ = 0;
};

/// Largest value of `var`, searched in [lo, hi]. `seed` supplies a known
/// model (its value of `var` becomes the first lo). Stops on indecision.
SearchState search_max(Querier& q, const std::string& var, Int hi, const Model* seed = nullptr);

/// Midpoint binary search on the cost variable starting from `init_hi`.
/// A feasibility check comes first and separates infeasible programs.
OptimizationResult maximize_binary_search(const Formula& f, Int init_hi, const OmtOptions& opts);

/// Optimizes each cut variable in increasing portion size, asserting every
/// maximum as a tighter bound, then the cost.
OptimizationResult maximize_cut_ordered(const Formula& f, Int init_hi, const OmtOptions& opts);

/// Decodes the taken path from a model and checks it against the program.
/// Throws wcet::Error("omt") on an invalid path or a cost mismatch.
WitnessPath extract_witness(const Formula& f, const Model& m, const Program& p, const CostModel& costs);

/// Header-to-merge region of a closed portion as a program of its own: the
/// header (without its phis) is the entry, the merge the exit. Values from
/// outside become havocs; the header's block cost is dropped.
struct SubProgram {
    Program program;
    CostModel costs;
    std::vector<BlockId> origin;
};
SubProgram extract_portion(const Program& p, const CostModel& costs, const Portion& portion);

/// Semantic WCET of a closed portion, at most its syntactic bound. Falls
/// back to the bound found so far on indecision; 0 if the region can never
/// execute. Portions of `known` nested inside become cuts of the
/// sub-problem with their current bounds.
Int refine_portion_bound(const Program& p, const Portion& portion, const CostModel& costs, const OmtOptions& opts,
                         const std::vector<Portion>& known = {});

/// Tightens the bound of every contiguous, non-whole-program portion,
/// innermost first, reusing the bounds of nested portions. The OpenMP
/// variant runs independent portions concurrently with one solver each.
void refine_bounds(std::vector<Portion>& portions, const Program& p, const CostModel& costs, const OmtOptions& opts);
void refine_bounds_serial(std::vector<Portion>& portions, const Program& p, const CostModel& costs,
                          const OmtOptions& opts);

enum class Strategy { Binary, CutOrdered };
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct AnalyzeOptions {
    EncodingOptions encoding;
    Strategy strategy = Strategy::Binary;
    bool refine_portions = false;
    UnrollOptions unroll;
    OmtOptions omt;
};

struct Analysis {
    Program program;  // after unrolling
    CostModel costs;
    std::vector<Portion> portions;
    PortionTree tree;
    Formula formula;
    OptimizationResult result;
};

/// Unroll, find portions and bounds (refined on request), encode. The
/// result field is left empty.
Analysis prepare_analysis(const Program& p, const CostModel& costs, const AnalyzeOptions& opts);

/// prepare_analysis, then maximize and extract the witness.
Analysis analyze(const Program& p, const CostModel& costs, const AnalyzeOptions& opts);

}  // namespace wcet
