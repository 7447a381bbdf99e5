#pragma once

// Event-driven simulation of the r-scaled system under a priority policy.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "rmab/model.hpp"
#include "rmab/policy.hpp"

namespace rmab {

struct SimConfig {
  double r = 1.0;
  double horizon = 0.0;  // 0: 1e3 / min positive rate
  double burn_in = 0.2;
  int batches = 20;
  std::uint64_t seed = 1;
  /// Record (t, cost rate / r, counts / r) every this many time units (0: off).
  double series_interval = 0.0;
};

struct SeriesPoint {
  double t = 0.0;
  double cost_rate = 0.0;
  std::vector<double> scaled_counts;
};

struct SimulationResult {
  double r = 0.0;
  int budget = 0;
  double horizon = 0.0;
  double estimate = 0.0;     // time-average cost / r over the retained window
  double half_width = 0.0;   // 95% batch-means half width
  std::vector<double> batch_means;
  std::vector<double> passive_occupancy;  // time averages / r
  std::vector<double> active_occupancy;
  std::size_t events = 0;
  std::vector<int> terminal_counts;
  bool unstable = false;
  std::vector<SeriesPoint> series;
};

/// Initial counts round(x r) for fixed populations, empty system otherwise;
/// budget round(alpha r). Deterministic given the seed.
SimulationResult simulate(const ModelInstance& model, const PriorityPolicy& policy, const SimConfig& config);

struct ConvergenceRow {
  double r = 0.0;
  double estimate = 0.0;
  double half_width = 0.0;
  double v_star = 0.0;
  double relative_error = 0.0;
};

/// One simulation per r (run concurrently, seeds split from config.seed)
/// against the fluid optimum v*. `v_star` defaults to the fluid program's value.
std::vector<ConvergenceRow> convergence_study(const ModelInstance& model, const PriorityPolicy& policy,
                                              const std::vector<double>& r_list, const SimConfig& config,
                                              std::optional<double> v_star = std::nullopt);

nlohmann::json to_json(const SimulationResult& result, const StateIndexer& index);
/// Columns t, cost_rate, then counts / r labelled "k.j".
void write_series_csv(std::ostream& out, const StateIndexer& index, const SimulationResult& result);
/// Columns r, estimate, half_width, v_star, relative_error.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

}  // namespace rmab
