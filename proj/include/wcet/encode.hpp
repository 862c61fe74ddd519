#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wcet/cfgkit.hpp"
#include "wcet/program.hpp"

namespace wcet {

enum class CostEncoding { Sum, Counter };
enum class CutMode { None, Leaves, Hierarchical };

std::string_view to_string(CostEncoding e);
std::string_view to_string(CutMode m);
CostEncoding parse_cost_encoding(std::string_view s);
CutMode parse_cut_mode(std::string_view s);

struct EncodingOptions {
    CostEncoding cost_encoding = CostEncoding::Sum;
    CutMode cuts = CutMode::Hierarchical;
    /// Leave non-linear definitions unconstrained instead of rejecting them.
    bool havoc_unsupported = false;
};

struct Decl {
    std::string name;
    Type type;
};

enum class Section { Semantics, Timing, Cuts };

struct Assertion {
    Expr expr;
    Section section = Section::Semantics;
};

/// A cut: `var = sum` and `var <= bound`. The whole-program cut has no
/// variable of its own and bounds the cost variable directly.
struct Cut {
    std::size_t portion_id = 0;
    std::string var;
    Expr sum;
    Int bound = 0;
    std::string label;
    bool whole_program = false;
    /// Ordering key for cut-ordered optimization: edge count, then the
    /// header's topological position.
    std::size_t size = 0;
    std::size_t header_pos = 0;
};

/// Solver-independent formula over Booleans and linear integer arithmetic.
/// Cut assertions are generated from `cuts` when emitted, so bounds may be
/// tightened after encoding.
struct Formula {
    std::vector<Decl> decls;
    std::vector<Assertion> asserts;
    std::string cost_var = "cost";
    std::vector<Cut> cuts;
    CostEncoding encoding = CostEncoding::Sum;

    /// Throws wcet::Error("encode") if `name` is already declared.
    void declare(const std::string& name, Type t);
    bool declared(const std::string& name) const;
    std::optional<Type> type_of(const std::string& name) const;
    void add(Expr e, Section s) { asserts.push_back(Assertion{std::move(e), s}); }

    /// The defining equation and the bound of every cut.
    std::vector<Expr> cut_assertions() const;
    /// Base assertions followed by cut assertions.
    std::vector<Expr> all_assertions() const;
};

/// Block and transition Booleans, SSA definitions, phis, assumptions and
/// input ranges. No cost yet.
Formula encode_semantics(const Program& p, bool havoc_unsupported = false);

/// `c_i_j = ite(t_i_j, cost, 0)` per edge, block terms when block costs are
/// present, and `cost` as their sum.
void encode_cost_sum(Formula& f, const Program& p, const CostModel& costs);

/// Per-block time counter `tau_i` (time when leaving block i) and
/// `cost = tau_exit`.
void encode_cost_counter(Formula& f, const Program& p, const CostModel& costs);

/// Cuts for `portions` (bounds already filled in). In counter encoding only
/// contiguous portions get a cut.
void encode_cuts(Formula& f, const Program& p, const CostModel& costs, const std::vector<Portion>& portions);

/// Portions receiving a cut under `mode`: every found portion for Leaves;
/// those plus the internal grouping nodes for Hierarchical; both add the
/// whole program. Bounds are copied from the inputs.
std::vector<Portion> select_cut_portions(CutMode mode, const std::vector<Portion>& portions, const PortionTree& tree,
                                         const Program& p, const CostModel& costs);

/// Semantics, costs and cuts in one call; computes portions and bounds.
Formula encode(const Program& p, const CostModel& costs, const EncodingOptions& opts);

/// Cost term of a portion: sum of its edge cost terms and block cost terms.
Expr portion_sum(const Program& p, const CostModel& costs, const Portion& portion);

struct EmitOptions {
    /// Raw SMT-LIB lines placed before set-logic (solver options).
    std::vector<std::string> options;
    /// Variables for get-value; empty means every declaration.
    std::vector<std::string> get_values;
    bool check_sat = true;
    bool with_cuts = true;
};

/// Everything up to and including the cut assertions, without check-sat.
std::string emit_prefix(const Formula& f, const EmitOptions& opts = {});

/// A complete deterministic script: prefix, the extra assertions, check-sat,
/// get-value, exit.
std::string emit_smtlib(const Formula& f, const std::vector<Expr>& extra = {}, const EmitOptions& opts = {});

/// Names of all declarations, in declaration order.
std::vector<std::string> decl_names(const Formula& f);

}  // namespace wcet
