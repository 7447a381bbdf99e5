#pragma once

// Priority policies, the set induced by an optimal equilibrium point, and the
// breakpoint-based selection among its members.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rmab/lp.hpp"
#include "rmab/model.hpp"

namespace rmab {

/// Activates bandits greedily down `order`; states in `never_active` are
/// never activated. Together the two lists cover every state exactly once.
struct PriorityPolicy {
  std::string name;
  std::vector<StateId> order;
  std::vector<StateId> never_active;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  /// Position in `order`, or npos.
  std::size_t rank(StateId s) const;
  bool excluded(StateId s) const;
  bool operator==(const PriorityPolicy& o) const {
    return order == o.order && never_active == o.never_active;
  }
};

/// Throws InvalidModel unless the policy is a partition of the model's states.
void check_policy(const PriorityPolicy& policy, const StateIndexer& index);

/// "prio213" style name for single-class policies, else "1.2>1.1|!1.3".
std::string describe(const PriorityPolicy& policy);

nlohmann::json to_json(const PriorityPolicy& policy);
PriorityPolicy policy_from_json(const nlohmann::json& doc);

/// Builtin names: "prioXYZ" (digits are 1-based states of class 1, all other
/// states never active), "all-passive". Throws InvalidModel otherwise.
PriorityPolicy named_policy(const std::string& name, const ModelInstance& model);

struct PolicyConstraints {
  /// (a, b): a must be ranked above b unless b is never active.
  std::vector<std::pair<StateId, StateId>> must_dominate;
  std::vector<StateId> forced_never_active;
  /// States with positive active mass; they may not be excluded.
  std::vector<StateId> must_remain_active;
};

/// The three ranking rules induced by an optimal equilibrium point.
PolicyConstraints pi_star_constraints(const EquilibriumPoint& eq, double alpha);

bool is_in_pi_star(const PriorityPolicy& policy, const EquilibriumPoint& eq, double alpha);

/// Every policy that excludes exactly the forced states and orders the rest
/// as a linear extension of the dominance relation, up to `limit` policies,
/// in lexicographic order of the state sequences.
std::vector<PriorityPolicy> pi_star_extensions(const EquilibriumPoint& eq, double alpha,
                                               std::size_t limit = 10000);

/// Selection rule over a breakpoint table at the swept parameter `value`.
/// Throws OutOfRange if `value` is outside the table.
PriorityPolicy select_policy(const BreakpointTable& table, double value);

/// select_policy at the model's own operating point: a total-mass sweep for
/// fixed populations, an alpha sweep over (0, 4 alpha] for dynamic ones.
PriorityPolicy selected_policy(const ModelInstance& model);

/// Per-class abandonment index q(0|1,1) (C(1,0)/q(0|1,0) - C(1,1)/q(0|1,1)).
/// Requires single-state classes with passive departures.
std::vector<double> abandonment_index(const ModelInstance& model);

/// Serves classes by decreasing index, never serves index <= 0.
PriorityPolicy abandonment_policy(const ModelInstance& model);

/// Searches the optimal face of the fluid program for an optimum against
/// which `policy` is in the induced set, by re-solving inside the face with
/// objectives that reward the policy's ranking. Returns nullopt if none of
/// the candidates conforms.
std::optional<EquilibriumPoint> conforming_optimum(const ModelInstance& model, const PriorityPolicy& policy,
                                                   const EquilibriumPoint& canonical);

}  // namespace rmab
