#pragma once

// Fluid ODE of a priority policy and a sampled global-attractor check.
// Fluid states are flat vectors in StateIndexer order.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmab/lp.hpp"
#include "rmab/model.hpp"
#include "rmab/policy.hpp"

namespace rmab {

struct Allocation {
  std::vector<double> active;
  std::vector<double> passive;
};

/// Water-filling down the priority order with budget alpha.
Allocation fluid_allocation(const StateIndexer& index, const PriorityPolicy& policy, double alpha,
                            const std::vector<double>& x);

/// Precompiled right-hand side of the fluid ODE for one policy.
class FluidSystem {
 public:
  FluidSystem(const ModelInstance& model, const PriorityPolicy& policy);

  std::size_t dimension() const { return index_.size(); }
  const StateIndexer& indexer() const { return index_; }
  /// dx = lambda p + sum_a sum_i x^a_i q(.|i,a).
  void rhs(const std::vector<double>& x, std::vector<double>& dx) const;
  /// Active share of x under the policy.
  void allocate(const std::vector<double>& x, std::vector<double>& active) const;

 private:
  StateIndexer index_;
  double alpha_ = 0.0;
  std::vector<std::size_t> order_;       // flat indices by priority
  std::vector<double> inflow_;           // lambda_k p_k(j)
  std::vector<std::size_t> block_start_; // first flat index of the origin's class
  std::vector<std::size_t> block_size_;
  std::vector<std::vector<double>> column_[2];  // q(.|i,a) over the class block
};

std::vector<double> fluid_rhs(const ModelInstance& model, const PriorityPolicy& policy,
                              const std::vector<double>& x);

struct IntegrateOptions {
  double horizon = 0.0;  // 0: 200 / min positive rate
  double step = 0.0;     // 0: 0.01 / qbar
  /// Record every `record_stride` steps (0: only the endpoints).
  std::size_t record_stride = 0;
  /// Stop early once ||dx/dt||_inf falls to this value (0: never).
  double stationary_tol = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<double> terminal;
  double end_time = 0.0;
  std::size_t steps = 0;
  /// Smallest component seen before clamping.
  double min_component = 0.0;
};

/// Default horizon and step of `model` as used by integrate.
double default_horizon(const ModelInstance& model);
double default_step(const ModelInstance& model);

/// Fixed-step RK4. Components in [-1e-12, 0) are clamped to 0 after each
/// step. Throws Diverged if a component exceeds 1e12.
Trajectory integrate(const ModelInstance& model, const PriorityPolicy& policy, const std::vector<double>& x0,
                     const IntegrateOptions& options = {});

/// Columns t, then x_{j,k} labelled "k.j".
void write_trajectory_csv(std::ostream& out, const StateIndexer& index, const Trajectory& trajectory);

struct AttractorOptions {
  std::size_t n_samples = 64;
  double horizon = 0.0;  // 0: default_horizon
  double tol = 1e-4;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct AttractorReport {
  std::size_t converged_count = 0;
  std::size_t total_samples = 0;  // random samples plus corners
  double max_terminal_distance = 0.0;
  std::vector<std::vector<double>> starts;
  std::vector<std::vector<double>> terminals;
  std::vector<double> distances;
  bool pass = false;
  /// "pass (sampled)" or "fail".
  std::string verdict() const { return pass ? "pass (sampled)" : "fail"; }
};

/// Integrates from random and corner initial states and compares every
/// terminal point with x*. Fixed populations sample each class uniformly on
/// its mass simplex (corners: each class concentrated in one state); dynamic
/// ones sample the box [0, 3x* + 1] (corners: 0 and 2x*).
AttractorReport attractor_check(const ModelInstance& model, const PriorityPolicy& policy,
                                const EquilibriumPoint& x_star, const AttractorOptions& options = {});

nlohmann::json to_json(const AttractorReport& report, const StateIndexer& index);

}  // namespace rmab
