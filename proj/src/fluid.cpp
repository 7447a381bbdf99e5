#include "rmab/fluid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "rmab/errors.hpp"
#include "rmab/format.hpp"
#include "rmab/kernels.hpp"
#include "rmab/seed.hpp"

namespace rmab {

namespace {

constexpr double kBlowUp = 1e12;
constexpr double kClamp = 1e-12;

std::vector<std::size_t> flat_order(const StateIndexer& index, const PriorityPolicy& policy) {
  std::vector<std::size_t> order;
  for (StateId s : policy.order) order.push_back(index.flat(s));
  return order;
}

void water_fill(const std::vector<std::size_t>& order, double alpha, const std::vector<double>& x,
                std::vector<double>& active) {
  active.assign(x.size(), 0.0);
  double left = alpha;
  for (std::size_t i : order) {
    if (left <= 0.0) break;
    active[i] = std::min(left, std::max(x[i], 0.0));
    left -= active[i];
  }
}

}  // namespace

Allocation fluid_allocation(const StateIndexer& index, const PriorityPolicy& policy, double alpha,
                            const std::vector<double>& x) {
  Allocation a;
  water_fill(flat_order(index, policy), alpha, x, a.active);
  a.passive.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a.passive[i] = x[i] - a.active[i];
  return a;
}

FluidSystem::FluidSystem(const ModelInstance& model, const PriorityPolicy& policy)
    : index_(model), alpha_(model.alpha) {
  check_policy(policy, index_);
  order_ = flat_order(index_, policy);
  const std::size_t n = index_.size();
  inflow_.assign(n, 0.0);
  block_start_.resize(n);
  block_size_.resize(n);
  for (int a : {kPassive, kActive}) column_[a].resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const StateId s = index_.state(i);
    const BanditClass& c = model.classes[s.k];
    if (!model.is_fixed()) inflow_[i] = c.arrival_rate * c.entry_dist[s.j];
    block_start_[i] = index_.flat({s.k, 0});
    block_size_[i] = static_cast<std::size_t>(c.num_states);
    for (int a : {kPassive, kActive}) {
      column_[a][i].resize(block_size_[i]);
      for (int j = 0; j < c.num_states; ++j) column_[a][i][j] = c.rate(s.j, j, a);
    }
  }
}

void FluidSystem::allocate(const std::vector<double>& x, std::vector<double>& active) const {
  water_fill(order_, alpha_, x, active);
}

void FluidSystem::rhs(const std::vector<double>& x, std::vector<double>& dx) const {
  thread_local std::vector<double> active;
  allocate(x, active);
  dx = inflow_;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::span<double> block(dx.data() + block_start_[i], block_size_[i]);
    const double on = active[i], off = x[i] - active[i];
    if (off != 0.0) kernels::axpy(off, column_[kPassive][i], block);
    if (on != 0.0) kernels::axpy(on, column_[kActive][i], block);
  }
}

std::vector<double> fluid_rhs(const ModelInstance& model, const PriorityPolicy& policy,
                              const std::vector<double>& x) {
  std::vector<double> dx;
  FluidSystem(model, policy).rhs(x, dx);
  return dx;
}

double default_horizon(const ModelInstance& model) {
  const double r = min_positive_rate(model);
  return r > 0.0 ? 200.0 / r : 1.0;
}

double default_step(const ModelInstance& model) {
  const double q = uniformization_rate(model);
  return q > 0.0 ? 0.01 / q : 0.01;
}

namespace {

Trajectory run(const FluidSystem& sys, const std::vector<double>& x0, double horizon, double h,
               std::size_t stride, double stationary_tol) {
  if (!(horizon > 0.0) || !(h > 0.0)) throw OutOfRange("horizon and step must be positive");
  const std::size_t n = sys.dimension();
  if (x0.size() != n) throw InvalidModel("initial state has the wrong dimension");
  Trajectory tr;
  std::vector<double> x = x0, k1, k2, k3, k4, tmp(n), zero(n, 0.0);
  tr.min_component = n ? *std::min_element(x.begin(), x.end()) : 0.0;
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.states.push_back(x);
  };
  record(0.0);
  double t = 0.0;
  bool recorded_last = true;
  while (t < horizon * (1.0 - 1e-12)) {
    const double step = std::min(h, horizon - t);
    sys.rhs(x, k1);
    if (stationary_tol > 0.0 && kernels::max_abs_diff(k1, zero) <= stationary_tol) break;
    kernels::add_scaled(x, 0.5 * step, k1, tmp);
    sys.rhs(tmp, k2);
    kernels::add_scaled(x, 0.5 * step, k2, tmp);
    sys.rhs(tmp, k3);
    kernels::add_scaled(x, step, k3, tmp);
    sys.rhs(tmp, k4);
    kernels::axpy(step / 6.0, k1, x);
    kernels::axpy(step / 3.0, k2, x);
    kernels::axpy(step / 3.0, k3, x);
    kernels::axpy(step / 6.0, k4, x);
    for (double& v : x) {
      tr.min_component = std::min(tr.min_component, v);
      if (v < 0.0 && v >= -kClamp) v = 0.0;
      if (!(std::fabs(v) <= kBlowUp)) throw Diverged("fluid trajectory left the region |x| <= 1e12");
    }
    t += step;
    ++tr.steps;
    recorded_last = false;
    if (stride > 0 && tr.steps % stride == 0) {
      record(t);
      recorded_last = true;
    }
  }
  if (!recorded_last) record(t);
  tr.end_time = t;
  tr.terminal = x;
  return tr;
}


}  // namespace

Trajectory integrate(const ModelInstance& model, const PriorityPolicy& policy, const std::vector<double>& x0,
                     const IntegrateOptions& options) {
  const FluidSystem sys(model, policy);
  const double horizon = options.horizon > 0.0 ? options.horizon : default_horizon(model);
  const double h = options.step > 0.0 ? options.step : default_step(model);
  return run(sys, x0, horizon, h, options.record_stride, options.stationary_tol);
}

void write_trajectory_csv(std::ostream& out, const StateIndexer& index, const Trajectory& tr) {
  std::vector<std::string> header{"t"};
  for (StateId s : index.states()) header.push_back(to_label(s));
  CsvWriter csv(out, header);
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    csv.cell(tr.times[r]);
    for (double v : tr.states[r]) csv.cell(v);
    csv.end_row();
  }
}

AttractorReport attractor_check(const ModelInstance& model, const PriorityPolicy& policy,
                                const EquilibriumPoint& x_star, const AttractorOptions& options) {
  if (options.n_samples < 1) throw OutOfRange("attractor check needs at least one sample");
  const FluidSystem sys(model, policy);
  const StateIndexer& idx = sys.indexer();
  const std::size_t n = idx.size();
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = x_star.passive[i] + x_star.active[i];

  // Initial states: random samples first, then the corners.
  std::vector<std::vector<double>> starts;
  for (std::size_t s = 0; s < options.n_samples; ++s) {
    std::mt19937_64 rng(derive_seed(options.seed, s));
    std::vector<double> x(n, 0.0);
    if (model.is_fixed()) {
      std::exponential_distribution<double> expo(1.0);
      for (int k = 0; k < model.num_classes(); ++k) {
        const std::size_t b = idx.flat({k, 0});
        const int J = idx.num_states(k);
        double sum = 0.0;
        for (int j = 0; j < J; ++j) sum += x[b + j] = expo(rng);
        for (int j = 0; j < J; ++j) x[b + j] *= model.class_mass(k) / sum;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        x[i] = std::uniform_real_distribution<double>(0.0, 3.0 * target[i] + 1.0)(rng);
    }
    starts.push_back(std::move(x));
  }
  if (model.is_fixed()) {
    for (int k = 0; k < model.num_classes(); ++k)
      for (int j = 0; j < idx.num_states(k); ++j) {
        std::vector<double> x = target;
        const std::size_t b = idx.flat({k, 0});
        for (int i = 0; i < idx.num_states(k); ++i) x[b + i] = 0.0;
        x[b + j] = model.class_mass(k);
        starts.push_back(std::move(x));
      }
  } else {
    starts.emplace_back(n, 0.0);
    std::vector<double> twice = target;
    for (double& v : twice) v *= 2.0;
    starts.push_back(std::move(twice));
  }

  const double horizon = options.horizon > 0.0 ? options.horizon : default_horizon(model);
  const double h = default_step(model);
  const double rate = min_positive_rate(model);
  const double stationary = 1e-3 * options.tol * (rate > 0.0 ? rate : 1.0);

  AttractorReport rep;
  rep.total_samples = starts.size();
  rep.starts = starts;
  rep.terminals.assign(starts.size(), {});
  rep.distances.assign(starts.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t s = next++; s < starts.size(); s = next++) {
      try {
        rep.terminals[s] = run(sys, starts[s], horizon, h, 0, stationary).terminal;
        rep.distances[s] = kernels::max_abs_diff(rep.terminals[s], target);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, starts.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (double d : rep.distances) {
    rep.max_terminal_distance = std::max(rep.max_terminal_distance, d);
    if (d <= options.tol) ++rep.converged_count;
  }
  rep.pass = rep.converged_count == rep.total_samples;
  return rep;
}

nlohmann::json to_json(const AttractorReport& rep, const StateIndexer& index) {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t s = 0; s < rep.starts.size(); ++s) {
    nlohmann::json start = nlohmann::json::object(), end = nlohmann::json::object();
    for (std::size_t i = 0; i < index.size(); ++i) {
      start[to_label(index.state(i))] = rep.starts[s][i];
      end[to_label(index.state(i))] = rep.terminals[s][i];
    }
    samples.push_back({{"start", start}, {"terminal", end}, {"distance", rep.distances[s]}});
  }
  return {{"verdict", rep.verdict()},
          {"converged_count", rep.converged_count},
          {"total_samples", rep.total_samples},
          {"max_terminal_distance", rep.max_terminal_distance},
          {"samples", samples}};
}

}  // namespace rmab
