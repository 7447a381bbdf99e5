#pragma once

// Exact solvers: the uniformized single-bandit discounted problem behind the
// Whittle index, and relative value iteration on the occupancy-vector chain
// of a small fixed population.

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rmab/model.hpp"
#include "rmab/policy.hpp"

namespace rmab {

/// States 0..J: 0 is the absorbing departure state with zero cost, state j
/// is the class state j-1.
struct SingleBanditMdp {
  int num_states = 0;
  double discount = 0.0;
  double uniformization = 0.0;
  std::vector<double> cost[2];
  /// transition[a][i][j], rows sum to 1.
  std::vector<std::vector<double>> transition[2];
};

/// Discounted single-bandit problem with activation charge `nu`:
/// beta~ = qbar/(beta+qbar), C~ = (C + nu 1{a=1})/(beta+qbar),
/// p~ = q/qbar + I. A class with no transitions uses qbar = 1.
SingleBanditMdp build_single_bandit(const ModelInstance& model, int k, double beta, double nu);

struct SolveResult {
  std::vector<double> values;  // discounted values, or the bias for average cost
  std::vector<int> actions;    // discounted: optimal action per state; RVI: action index
  double gain = 0.0;           // average cost per unit time (RVI only)
  std::size_t iterations = 0;
  double residual = 0.0;       // sup-norm residual (VI) or final span (RVI)
};

struct DiscountedOptions {
  double tol = 1e-9;
  std::size_t max_iterations = 10'000'000;
  /// Also stop once the MacQueen bounds pin every value to within tol.
  bool macqueen_stop = true;
};

/// Bellman iteration until ||v_{n+1} - v_n|| <= tol (1 - b)/(2 b), or the
/// MacQueen bound criterion. Actions are greedy with ties resolved to
/// passive. `warm_start` (size num_states) seeds the iteration.
SolveResult value_iteration_discounted(const SingleBanditMdp& mdp, const DiscountedOptions& options = {},
                                       const std::vector<double>* warm_start = nullptr);

/// Q(j,1) - Q(j,0) at the values `v`, for every state.
std::vector<double> action_gaps(const SingleBanditMdp& mdp, const std::vector<double>& v);

/// Occupancy-vector chain of a fixed population with integer counts.
class PopulationMdp {
 public:
  static constexpr std::size_t kDefaultPairCap = 2'000'000;

  /// Throws InvalidModel for dynamic populations or non-integer counts and
  /// StateSpaceTooLarge beyond `pair_cap` state-action pairs.
  explicit PopulationMdp(const ModelInstance& model, std::size_t pair_cap = kDefaultPairCap);

  std::size_t num_states() const { return occupancy_.size(); }
  const std::vector<int>& occupancy(std::size_t s) const { return occupancy_[s]; }
  std::size_t index_of(const std::vector<int>& n) const;
  std::size_t initial_state() const { return initial_; }
  const StateIndexer& indexer() const { return index_; }
  int budget() const { return budget_; }
  double uniformization() const { return rate_; }
  /// True if only maximal allocations are offered (pair cap reached).
  bool restricted_actions() const { return restricted_; }

  /// Feasible activation vectors at state s.
  const std::vector<std::vector<int>>& actions(std::size_t s) const { return actions_[s]; }
  double cost_rate(std::size_t s, const std::vector<int>& m) const;

  struct Transition {
    std::size_t target;
    double rate;
  };
  /// Off-diagonal transitions out of s under activation m.
  std::vector<Transition> transitions(std::size_t s, const std::vector<int>& m) const;

  /// Greedy integer allocation of `policy` at occupancy n.
  std::vector<int> greedy_allocation(const std::vector<int>& n, const PriorityPolicy& policy) const;

  /// Number of states Π_k C(X_k + J_k - 1, J_k - 1).
  static double count_states(const ModelInstance& model);

 private:
  const ModelInstance* model_;
  StateIndexer index_;
  int budget_ = 0;
  double rate_ = 0.0;
  bool restricted_ = false;
  std::size_t initial_ = 0;
  std::vector<std::vector<int>> occupancy_;
  std::vector<std::vector<std::vector<int>>> actions_;
  std::vector<std::size_t> class_offset_;  // mixed-radix weights
  std::vector<std::vector<std::vector<int>>> class_compositions_;
};

struct RviOptions {
  double tol = 1e-9;
  std::size_t max_iterations = 1'000'000;
  std::size_t pair_cap = PopulationMdp::kDefaultPairCap;
  /// Aperiodicity transform P' = tau P + (1 - tau) I.
  double tau = 0.95;
};

/// Average-cost optimal gain (policy = nullopt) or the gain of a priority
/// policy under its greedy allocation, by relative value iteration on the
/// uniformized chain with a span stop. A chain without transitions returns
/// the cost rate at the initial state. Throws StateSpaceTooLarge or
/// NoConvergence.
SolveResult relative_value_iteration(const ModelInstance& model,
                                     const std::optional<PriorityPolicy>& policy = std::nullopt,
                                     const RviOptions& options = {});

/// Fixed population with `total` bandits of class 1 in `state` (0-based);
/// other classes keep their counts.
ModelInstance concentrated_population(const ModelInstance& model, int total, int state = 0);

struct GapRow {
  int x0 = 0;
  std::string policy;
  double g_policy = 0.0;
  double g_opt = 0.0;
  double gap_percent = 0.0;  // absolute gap if g_opt == 0
  bool absolute = false;
  std::string resolved;  // name of the evaluated policy ("selected" rows)
};

/// For each population size, the optimal gain and every policy's gain. When
/// `include_selected` is set the breakpoint-selected policy is added as
/// "selected". `instance_at` builds the model for a given size.
std::vector<GapRow> suboptimality_table(const std::function<ModelInstance(int)>& instance_at,
                                        const std::vector<PriorityPolicy>& policies,
                                        const std::vector<int>& sizes, bool include_selected,
                                        const RviOptions& options = {});

/// Columns X0, policy, g_policy, g_opt, gap_percent, absolute, resolved.
void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows);

}  // namespace rmab
