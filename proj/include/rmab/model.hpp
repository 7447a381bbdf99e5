#pragma once

// Multi-class restless bandit model.
//
// Conventions used throughout the library:
//  * classes and states are 0-based internally (k = 0..K-1, j = 0..J_k-1);
//    every file format and printed label is 1-based, e.g. "2.3" is class 2,
//    state 3.
//  * generator rows are origin states. Column 0 holds the departure rate,
//    column j+1 the rate into state j. The diagonal entry is never stored;
//    q(j|j,a) is derived as minus the total outflow of row j.

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rmab {

/// Tolerance for validating human-entered probabilities and rates.
inline constexpr double kInputTolerance = 1e-12;

inline constexpr int kPassive = 0;
inline constexpr int kActive = 1;

struct StateId {
  int k = 0;
  int j = 0;
  auto operator<=>(const StateId&) const = default;
};

/// "k.j" with 1-based indices.
std::string to_label(StateId s);

/// Off-diagonal transition rates of one action, J x (J+1), departure in column 0.
class RateMatrix {
 public:
  RateMatrix() = default;
  explicit RateMatrix(int num_states)
      : n_(num_states), data_(static_cast<std::size_t>(num_states) * (num_states + 1), 0.0) {}

  int num_states() const { return n_; }
  double& at(int from, int column) { return data_[index(from, column)]; }
  double at(int from, int column) const { return data_[index(from, column)]; }

  bool operator==(const RateMatrix&) const = default;

 private:
  std::size_t index(int from, int column) const {
    return static_cast<std::size_t>(from) * (n_ + 1) + column;
  }
  int n_ = 0;
  std::vector<double> data_;
};

struct BanditClass {
  int num_states = 0;
  double arrival_rate = 0.0;
  std::vector<double> entry_dist;
  RateMatrix gen_passive;
  RateMatrix gen_active;
  std::vector<double> cost_passive;
  std::vector<double> cost_active;

  /// A class with `num_states` states and everything else zero.
  static BanditClass zeros(int num_states);

  const RateMatrix& generator(int action) const {
    return action == kActive ? gen_active : gen_passive;
  }
  RateMatrix& generator(int action) { return action == kActive ? gen_active : gen_passive; }
  double cost(int j, int action) const {
    return action == kActive ? cost_active[j] : cost_passive[j];
  }

  /// q(to|from, a) between internal states, including the derived diagonal.
  double rate(int from, int to, int action) const;
  double departure_rate(int from, int action) const { return generator(action).at(from, 0); }
  /// -q(from|from, a): total rate of leaving `from`, departures included.
  double outflow(int from, int action) const;

  bool operator==(const BanditClass&) const = default;
};

struct FixedPopulation {
  /// counts[k][j] = x_{j,k}(0); reals for the fluid model, integers for stochastic use.
  std::vector<std::vector<double>> counts;
  bool operator==(const FixedPopulation&) const = default;
};

struct DynamicPopulation {
  bool operator==(const DynamicPopulation&) const = default;
};

using Population = std::variant<FixedPopulation, DynamicPopulation>;

struct ModelInstance {
  std::vector<BanditClass> classes;
  double alpha = 1.0;
  Population population = DynamicPopulation{};

  int num_classes() const { return static_cast<int>(classes.size()); }
  bool is_fixed() const { return std::holds_alternative<FixedPopulation>(population); }
  const FixedPopulation* fixed() const { return std::get_if<FixedPopulation>(&population); }
  FixedPopulation* fixed() { return std::get_if<FixedPopulation>(&population); }
  /// x_k(0) = sum_j x_{j,k}(0); 0 for dynamic populations.
  double class_mass(int k) const;
  double total_mass() const;

  bool operator==(const ModelInstance&) const = default;
};

/// Bijection between StateId and a flat index in (k, j) lexicographic order.
class StateIndexer {
 public:
  StateIndexer() = default;
  explicit StateIndexer(const ModelInstance& model);

  std::size_t size() const { return states_.size(); }
  int num_classes() const { return static_cast<int>(offsets_.size()) - 1; }
  int num_states(int k) const { return static_cast<int>(offsets_[k + 1] - offsets_[k]); }
  std::size_t flat(StateId s) const { return offsets_[s.k] + s.j; }
  StateId state(std::size_t i) const { return states_[i]; }
  const std::vector<StateId>& states() const { return states_; }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<StateId> states_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Lists every violated model invariant. Pure; never throws.
ValidationReport validate(const ModelInstance& model);

/// Throws InvalidModel carrying the report if `model` is not valid.
void require_valid(const ModelInstance& model);

/// Adds `passive_cost` to every C_k(j,0). A large enough shift makes any
/// optimal policy keep exactly alpha bandits active. Rejects negative shifts.
ModelInstance exactly_alpha_transform(const ModelInstance& model, double passive_cost);

/// max over (state, class, action) of the total outflow rate; 0 if all
/// generators vanish.
double uniformization_rate(const ModelInstance& model);

/// Smallest strictly positive rate in the model (transitions, departures,
/// arrivals); 0 if there is none.
double min_positive_rate(const ModelInstance& model);

/// Raw parameters of one customer class of a multi-server queue with
/// abandonments. Waiting customers are passive bandits, customers in service
/// active ones.
struct AbandonmentParams {
  double lambda = 1.0;       // arrival rate
  double mu = 1.0;           // service rate
  double theta = 1.0;        // abandonment rate while waiting
  double theta_tilde = 0.0;  // abandonment rate while in service
  double c = 0.0;            // holding cost while waiting
  double c_tilde = 0.0;      // holding cost while in service
  double d = 0.0;            // cost per abandonment while waiting
  double d_tilde = 0.0;      // cost per abandonment while in service
};

/// Single-state class with q(0|1,0) = theta, q(0|1,1) = mu + theta_tilde and
/// abandonment penalties folded into the holding costs.
BanditClass abandonment_class(const AbandonmentParams& p);

/// Dynamic-population model with `servers` as the activation budget.
ModelInstance abandonment_model(std::span<const AbandonmentParams> params, double servers);

}  // namespace rmab
