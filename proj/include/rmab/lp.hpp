#pragma once

// Fluid relaxation of the restless bandit problem and the dense simplex
// solver behind it.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmab/model.hpp"

namespace rmab {

/// Components at or below this value count as zero when classifying
/// equilibrium points; smaller stored values are clamped to 0.
inline constexpr double kPositiveThreshold = 1e-9;
/// Residual allowed on the balance, budget and mass constraints.
inline constexpr double kConstraintTolerance = 1e-8;

struct StateAction {
  StateId state;
  int action = kPassive;
};

/// min c.x  s.t.  eq_rows x = eq_rhs,  le_rows x <= le_rhs,  x >= 0.
struct LpProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<std::vector<double>> le_rows;
  std::vector<double> le_rhs;
  /// Column meaning for the bandit programs; empty for generic problems.
  std::vector<StateAction> columns;

  explicit LpProblem(std::size_t n = 0) : num_vars(n), objective(n, 0.0) {}
  void add_eq(std::vector<double> row, double rhs);
  void add_le(std::vector<double> row, double rhs);
};

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
  /// Basic columns of the standard form, one per non-redundant row:
  /// [0, n) structural, [n, n + #le) slacks.
  std::vector<std::size_t> basis;
  /// Duals y with c - A^T y >= 0 at optimality (le duals are <= 0).
  std::vector<double> eq_duals;
  std::vector<double> le_duals;
  std::size_t iterations = 0;
  std::size_t redundant_rows = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double phase1_tol = 1e-7;
  std::size_t max_iterations = 200000;
};

/// Dense two-phase primal simplex with Bland's rule. Redundant equality rows
/// are detected at the end of Phase 1 and dropped. Throws Infeasible or
/// Unbounded.
LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& options = {});

/// Solves for the basic variables of `basis` (standard-form column indices)
/// and returns the structural part of that basic solution. Returns nullopt if
/// the basis is singular or inconsistent with the right-hand side.
std::optional<std::vector<double>> basic_solution(const LpProblem& problem,
                                                  const std::vector<std::size_t>& basis);

/// Fluid program over x^a_{j,k}: column 2*flat(k,j)+a. Rows: one balance row
/// per (j,k), then for fixed populations one mass row per class; a single
/// budget row as the only inequality. `entry_inflation` adds epsilon to every
/// p_k(j) (the perturbed program used to disambiguate degenerate optima).
LpProblem build_fluid_lp(const ModelInstance& model, double entry_inflation = 0.0);

/// Relaxed program for a fixed population: per-bandit state-action
/// frequencies with per-class balance and normalization rows and the budget
/// sum_k X_k(0) sum_j x^1_{j,k} <= alpha.
LpProblem build_relaxed_lp_fixed(const ModelInstance& model);

/// An optimal equilibrium point of the fluid program.
struct EquilibriumPoint {
  StateIndexer index;
  double alpha = 0.0;
  std::vector<double> passive;  // x^{*,0} per flat state
  std::vector<double> active;   // x^{*,1} per flat state
  double objective = 0.0;
  bool capacity_binding = false;
  std::vector<std::size_t> basis;

  double x(StateId s, int action) const {
    const std::size_t i = index.flat(s);
    return action == kActive ? active[i] : passive[i];
  }
  double mass(StateId s) const { return x(s, kPassive) + x(s, kActive); }
  double total_active() const;
  /// Pairs with both components above kPositiveThreshold.
  std::size_t split_count() const;
};

/// Builds an equilibrium point from a fluid LP solution vector, clamping
/// components below kPositiveThreshold.
EquilibriumPoint make_equilibrium(const ModelInstance& model, const std::vector<double>& x,
                                  std::vector<std::size_t> basis = {});

/// Infinity-norm residual of the balance rows, the budget excess and (fixed
/// populations) the mass rows at `eq`.
double constraint_residual(const ModelInstance& model, const EquilibriumPoint& eq);

/// Optimal fluid equilibrium with at most one pair receiving both actions.
/// Solves the program directly; if the returned vertex has more than one
/// split pair, falls back to support_restricted_optimum and then to
/// perturbed_structured_optimum. Throws StructureNotFound if both fail.
EquilibriumPoint structured_optimum(const ModelInstance& model);

/// Fallback path of structured_optimum: zero-mass states and every column
/// feeding them are removed and the program re-solved, repeatedly, until the
/// vertex has at most one split pair. Returns nullopt if that does not happen.
std::optional<EquilibriumPoint> support_restricted_optimum(const ModelInstance& model,
                                                           const EquilibriumPoint& start);

/// Second fallback (dynamic populations): the basis that
/// is stable across consecutive inflations {1e-4, 1e-5, 1e-6}, evaluated at
/// zero inflation. Returns nullopt when no stable conforming basis exists.
std::optional<EquilibriumPoint> perturbed_structured_optimum(const ModelInstance& model,
                                                             double optimal_value);

enum class PairRole { ActiveOnly, Split, PassiveOnly, Empty };

PairRole classify(const EquilibriumPoint& eq, StateId s);

struct SignPattern {
  std::vector<PairRole> roles;  // per flat state
  bool binding = false;
  bool operator==(const SignPattern&) const = default;
};

SignPattern sign_pattern(const EquilibriumPoint& eq);

enum class SweepParameter {
  Alpha,  // activation budget, more capacity at larger values
  Mass    // total initial mass at fixed alpha, more capacity at smaller values
};

struct PatternInterval {
  double lower = 0.0;
  double upper = 0.0;  // +inf for the last interval
  std::vector<StateId> high;         // active only
  std::optional<StateId> split;      // both actions
  std::vector<StateId> low;          // passive only
  std::vector<StateId> empty;        // no mass
  bool binding = false;
};

struct BreakpointTable {
  SweepParameter parameter = SweepParameter::Alpha;
  double alpha = 0.0;       // fixed alpha of a mass sweep
  double max_value = 0.0;   // largest swept parameter value
  bool degenerate_objective = false;
  std::vector<PatternInterval> intervals;

  std::vector<double> breakpoints() const;
  /// Index of the interval containing `value`; throws OutOfRange beyond max_value.
  std::size_t locate(double value) const;
  /// True if interval `n` offers more capacity than interval `i`.
  bool more_capacity(std::size_t n, std::size_t i) const {
    return parameter == SweepParameter::Alpha ? n > i : n < i;
  }
};

/// Sweeps alpha over (0, alpha_max] and records where the sign pattern of the
/// structured optimum changes, to `resolution`.
BreakpointTable alpha_breakpoints(const ModelInstance& model, double alpha_max,
                                  double resolution = 1e-6);

/// Fixed populations only: sweeps the total initial mass over (0, mass_max]
/// at the model's alpha, scaling the counts proportionally.
BreakpointTable mass_breakpoints(const ModelInstance& model, double mass_max,
                                 double resolution = 1e-6);

/// Copy of a fixed-population model with counts rescaled to total mass `mass`.
ModelInstance with_total_mass(const ModelInstance& model, double mass);

/// Values keyed "k.j.a" (1-based), plus objective and binding flag.
nlohmann::json to_json(const EquilibriumPoint& eq);
/// Columns k, j, x0, x1.
void write_equilibrium_csv(std::ostream& out, const EquilibriumPoint& eq);
nlohmann::json to_json(const BreakpointTable& table);
std::string role_name(PairRole role);

}  // namespace rmab
