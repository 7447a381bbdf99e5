#include "rmab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "rmab/errors.hpp"
#include "rmab/format.hpp"
#include "rmab/lp.hpp"
#include "rmab/seed.hpp"

namespace rmab {

namespace {

struct Channel {
  std::size_t from;
  std::size_t to;  // flat target; npos for a departure
  double passive_rate;
  double active_rate;
};

constexpr std::size_t kDeparture = static_cast<std::size_t>(-1);

// Integral bookkeeping over the retained window, split into batches.
class Accumulator {
 public:
  Accumulator(double start, double end, int batches, std::size_t states)
      : start_(start), end_(end), length_((end - start) / batches), cost_(batches, 0.0), passive_(states, 0.0),
        active_(states, 0.0) {}

  void add(double t0, double t1, double cost_rate, const std::vector<int>& n, const std::vector<int>& m) {
    const double a = std::max(t0, start_);
    if (t1 <= a) return;
    const double span = t1 - a;
    for (std::size_t i = 0; i < n.size(); ++i) {
      passive_[i] += (n[i] - m[i]) * span;
      active_[i] += m[i] * span;
    }
    const int nb = static_cast<int>(cost_.size());
    int b = std::min(nb - 1, static_cast<int>((a - start_) / length_));
    double from = a;
    while (from < t1) {
      const double edge = std::min(t1, upper(b));
      cost_[b] += cost_rate * (edge - from);
      from = edge;
      ++b;
    }
  }

  // Batch b covers [upper(b - 1), upper(b)).
  double upper(int b) const {
    return b + 1 == static_cast<int>(cost_.size()) ? end_ : start_ + (b + 1) * length_;
  }
  double span(int b) const { return upper(b) - (b == 0 ? start_ : upper(b - 1)); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& passive() const { return passive_; }
  const std::vector<double>& active() const { return active_; }

 private:
  double start_, end_, length_;
  std::vector<double> cost_, passive_, active_;
};

}  // namespace

SimulationResult simulate(const ModelInstance& model, const PriorityPolicy& policy, const SimConfig& config) {
  require_valid(model);
  const StateIndexer idx(model);
  check_policy(policy, idx);
  if (!(config.r > 0.0)) throw OutOfRange("scaling r must be positive");
  if (config.batches < 2) throw OutOfRange("at least 2 batches are needed");
  if (!(config.burn_in >= 0.0 && config.burn_in <= 0.9)) throw OutOfRange("burn-in must lie in [0, 0.9]");
  const double min_rate = min_positive_rate(model);
  const double horizon = config.horizon > 0.0 ? config.horizon : (min_rate > 0.0 ? 1e3 / min_rate : 1.0);

  const std::size_t S = idx.size();
  SimulationResult res;
  res.r = config.r;
  res.horizon = horizon;
  res.budget = static_cast<int>(std::llround(model.alpha * config.r));

  std::vector<int> n(S, 0), m(S, 0);
  if (const FixedPopulation* f = model.fixed())
    for (std::size_t i = 0; i < S; ++i) {
      const StateId s = idx.state(i);
      n[i] = static_cast<int>(std::llround(f->counts[s.k][s.j] * config.r));
    }

  std::vector<Channel> channels;
  std::vector<double> cost0(S), cost1(S);
  for (std::size_t i = 0; i < S; ++i) {
    const StateId s = idx.state(i);
    const BanditClass& c = model.classes[s.k];
    cost0[i] = c.cost_passive[s.j];
    cost1[i] = c.cost_active[s.j];
    if (c.departure_rate(s.j, kPassive) > 0.0 || c.departure_rate(s.j, kActive) > 0.0)
      channels.push_back({i, kDeparture, c.departure_rate(s.j, kPassive), c.departure_rate(s.j, kActive)});
    for (int j = 0; j < c.num_states; ++j) {
      if (j == s.j) continue;
      const double q0 = c.rate(s.j, j, kPassive), q1 = c.rate(s.j, j, kActive);
      if (q0 > 0.0 || q1 > 0.0) channels.push_back({i, idx.flat({s.k, j}), q0, q1});
    }
  }
  std::vector<std::size_t> arrival_class;
  std::vector<double> arrival_rate;
  if (!model.is_fixed())
    for (int k = 0; k < model.num_classes(); ++k)
      if (model.classes[k].arrival_rate > 0.0) {
        arrival_class.push_back(static_cast<std::size_t>(k));
        arrival_rate.push_back(model.classes[k].arrival_rate * config.r);
      }
  std::vector<std::discrete_distribution<int>> entry;
  for (const BanditClass& c : model.classes)
    entry.emplace_back(c.entry_dist.begin(), c.entry_dist.end());

  std::vector<std::size_t> order;
  for (StateId s : policy.order) order.push_back(idx.flat(s));
  auto allocate = [&]() {
    std::fill(m.begin(), m.end(), 0);
    int left = res.budget;
    for (std::size_t i : order) {
      if (left == 0) break;
      m[i] = std::min(n[i], left);
      left -= m[i];
    }
    if (left < 0) throw std::logic_error("activation budget exceeded");
  };
  auto cost_rate = [&]() {
    double c = 0.0;
    for (std::size_t i = 0; i < S; ++i) c += (n[i] - m[i]) * cost0[i] + m[i] * cost1[i];
    return c;
  };
  auto population = [&]() {
    long long p = 0;
    for (int x : n) p += x;
    return p;
  };

  std::mt19937_64 rng(derive_seed(config.seed, 0));
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Accumulator acc(config.burn_in * horizon, horizon, config.batches, S);
  std::vector<double> rates(channels.size());
  double t = 0.0, next_sample = 0.0;
  long long mid_population = -1;
  allocate();

  for (;;) {
    const double c = cost_rate();
    double total = 0.0;
    for (std::size_t e = 0; e < channels.size(); ++e) {
      const Channel& ch = channels[e];
      rates[e] = (n[ch.from] - m[ch.from]) * ch.passive_rate + m[ch.from] * ch.active_rate;
      total += rates[e];
    }
    for (double a : arrival_rate) total += a;
    const double dt = total > 0.0 ? expo(rng) / total : horizon;
    const double t_next = std::min(horizon, t + dt);

    while (config.series_interval > 0.0 && next_sample <= t_next && next_sample <= horizon) {
      SeriesPoint p{next_sample, c / config.r, {}};
      for (int x : n) p.scaled_counts.push_back(x / config.r);
      res.series.push_back(std::move(p));
      next_sample += config.series_interval;
    }
    if (mid_population < 0 && t_next >= 0.5 * horizon) mid_population = population();
    acc.add(t, t_next, c, n, m);
    if (t + dt >= horizon) break;
    t = t_next;

    double u = unif(rng) * total;
    std::size_t e = 0;
    for (; e < channels.size(); ++e) {
      if (u < rates[e]) break;
      u -= rates[e];
    }
    if (e < channels.size()) {
      const Channel& ch = channels[e];
      --n[ch.from];
      if (ch.to != kDeparture) ++n[ch.to];
    } else {
      std::size_t a = 0;
      for (; a + 1 < arrival_rate.size(); ++a) {
        if (u < arrival_rate[a]) break;
        u -= arrival_rate[a];
      }
      const std::size_t k = arrival_class.at(a);
      ++n[idx.flat({static_cast<int>(k), entry[k](rng)})];
    }
    ++res.events;
    allocate();
  }

  const double window = horizon * (1.0 - config.burn_in);
  res.batch_means.resize(config.batches);
  double mean = 0.0;
  for (int b = 0; b < config.batches; ++b) {
    res.batch_means[b] = acc.cost()[b] / acc.span(b) / config.r;
    mean += res.batch_means[b];
  }
  mean /= config.batches;
  double var = 0.0;
  for (double x : res.batch_means) var += (x - mean) * (x - mean);
  var /= config.batches - 1;
  const boost::math::students_t dist(config.batches - 1);
  res.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(var / config.batches);
  res.estimate = mean;
  for (std::size_t i = 0; i < S; ++i) {
    res.passive_occupancy.push_back(acc.passive()[i] / window / config.r);
    res.active_occupancy.push_back(acc.active()[i] / window / config.r);
  }
  res.terminal_counts = n;
  if (!model.is_fixed() && mid_population >= 0) {
    const double end = static_cast<double>(population()), mid = static_cast<double>(mid_population);
    res.unstable = end > 1.5 * mid + 10.0 * std::sqrt(config.r);
  }
  return res;
}

std::vector<ConvergenceRow> convergence_study(const ModelInstance& model, const PriorityPolicy& policy,
                                              const std::vector<double>& r_list, const SimConfig& config,
                                              std::optional<double> v_star) {
  if (r_list.size() < 2) throw OutOfRange("convergence study needs at least two values of r");
  for (std::size_t i = 1; i < r_list.size(); ++i)
    if (!(r_list[i] > r_list[i - 1])) throw OutOfRange("values of r must be ascending");
  const double v = v_star ? *v_star : structured_optimum(model).objective;

  std::vector<ConvergenceRow> rows(r_list.size());
  std::vector<std::exception_ptr> errors(r_list.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    pool.emplace_back([&, i]() {
      try {
        SimConfig c = config;
        c.r = r_list[i];
        c.seed = derive_seed(config.seed, i + 1);
        const SimulationResult s = simulate(model, policy, c);
        ConvergenceRow& row = rows[i];
        row.r = r_list[i];
        row.estimate = s.estimate;
        row.half_width = s.half_width;
        row.v_star = v;
        const double diff = std::fabs(s.estimate - v);
        row.relative_error = v != 0.0 ? diff / std::fabs(v) : diff;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

nlohmann::json to_json(const SimulationResult& res, const StateIndexer& index) {
  nlohmann::json occ = nlohmann::json::object();
  for (std::size_t i = 0; i < index.size(); ++i)
    occ[to_label(index.state(i))] = {{"passive", res.passive_occupancy[i]}, {"active", res.active_occupancy[i]}};
  nlohmann::json terminal = nlohmann::json::object();
  for (std::size_t i = 0; i < index.size(); ++i) terminal[to_label(index.state(i))] = res.terminal_counts[i];
  return {{"r", res.r},
          {"budget", res.budget},
          {"horizon", res.horizon},
          {"estimate", res.estimate},
          {"half_width", res.half_width},
          {"batch_means", res.batch_means},
          {"occupancy", occ},
          {"events", res.events},
          {"terminal_counts", terminal},
          {"unstable", res.unstable},
          {"rng", "mt19937_64 seeded by splitmix64(seed, stream)"}};
}

void write_series_csv(std::ostream& out, const StateIndexer& index, const SimulationResult& res) {
  std::vector<std::string> header{"t", "cost_rate"};
  for (StateId s : index.states()) header.push_back(to_label(s));
  CsvWriter csv(out, header);
  for (const SeriesPoint& p : res.series) {
    csv.cell(p.t).cell(p.cost_rate);
    for (double v : p.scaled_counts) csv.cell(v);
    csv.end_row();
  }
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  CsvWriter csv(out, {"r", "estimate", "half_width", "v_star", "relative_error"});
  for (const ConvergenceRow& r : rows) {
    csv.cell(r.r).cell(r.estimate).cell(r.half_width).cell(r.v_star).cell(r.relative_error);
    csv.end_row();
  }
}

}  // namespace rmab
