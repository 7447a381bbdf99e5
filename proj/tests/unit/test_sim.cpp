#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "rmab/errors.hpp"
#include "rmab/lp.hpp"
#include "rmab/policy.hpp"
#include "rmab/sim.hpp"

using namespace rmab;

namespace {

PriorityPolicy make(std::vector<StateId> order, std::vector<StateId> never) {
  PriorityPolicy p;
  p.order = std::move(order);
  p.never_active = std::move(never);
  return p;
}

ModelInstance frozen_chain() {
  ModelInstance m;
  BanditClass c = BanditClass::zeros(2);
  c.cost_passive = {0.5, 2.0};
  c.cost_active = {3.0, 3.0};
  m.classes = {c};
  m.alpha = 1.0;
  m.population = FixedPopulation{{{1.0, 0.4}}};
  return m;
}

// Single-state class with passive departures only.
ModelInstance infinite_server(double lambda, double theta) {
  AbandonmentParams p;
  p.lambda = lambda;
  p.theta = theta;
  p.c = 1.0;
  return abandonment_model(std::vector<AbandonmentParams>{p}, 1.0);
}

}  // namespace

TEST_CASE("frozen chain has exact cost and no variance") {
  const ModelInstance m = frozen_chain();
  SimConfig c;
  c.r = 10.0;
  c.horizon = 50.0;
  const SimulationResult r = simulate(m, make({}, {{0, 0}, {0, 1}}), c);
  CHECK(r.estimate == doctest::Approx(0.5 * 1.0 + 2.0 * 0.4));
  CHECK(r.half_width <= 1e-12);
  for (double b : r.batch_means) CHECK(b == doctest::Approx(1.3));
  CHECK(r.events == 0);
  CHECK(r.terminal_counts == std::vector<int>{10, 4});

  const auto rows = convergence_study(m, make({}, {{0, 0}, {0, 1}}), {5.0, 10.0, 100.0}, c, 1.3);
  for (const ConvergenceRow& row : rows) CHECK(row.relative_error <= 1e-12);
}

TEST_CASE("infinite-server mean lies in the interval") {
  const ModelInstance m = infinite_server(2.0, 0.5);
  const PriorityPolicy passive = make({}, {{0, 0}});
  SimConfig c;
  c.r = 50.0;
  int covered = 0;
  for (int seed = 1; seed <= 100; ++seed) {
    c.seed = static_cast<std::uint64_t>(seed);
    const SimulationResult r = simulate(m, passive, c);
    // Cost rate 1 per waiting bandit, so the estimate is the scaled mean population.
    if (std::fabs(r.estimate - 4.0) <= r.half_width) ++covered;
    CHECK(r.passive_occupancy[0] == doctest::Approx(r.estimate));
  }
  CHECK(covered >= 93);
}

TEST_CASE("budget is respected and the result is reproducible") {
  const ModelInstance m = test::load_scenario("mmsm-2class");
  const PriorityPolicy p = abandonment_policy(m);
  SimConfig c;
  c.r = 7.3;
  c.horizon = 100.0;
  c.seed = 5;
  c.series_interval = 1.0;
  const SimulationResult a = simulate(m, p, c);
  CHECK(a.budget == 7);
  double active = 0.0;
  for (double x : a.active_occupancy) active += x;
  CHECK(active <= m.alpha + 1.0 / c.r);
  CHECK(a.series.size() == 101);
  for (const SeriesPoint& s : a.series) CHECK(s.scaled_counts.size() == 2);

  const SimulationResult b = simulate(m, p, c);
  CHECK(a.estimate == b.estimate);
  CHECK(a.batch_means == b.batch_means);
  CHECK(a.terminal_counts == b.terminal_counts);
  CHECK(a.events == b.events);
  c.seed = 6;
  CHECK(simulate(m, p, c).batch_means != a.batch_means);

  std::ostringstream out;
  write_series_csv(out, StateIndexer(m), a);
  CHECK(out.str().rfind("t,cost_rate,1.1,2.1\n", 0) == 0);
  CHECK(to_json(a, StateIndexer(m))["budget"] == 7);
}

TEST_CASE("index policy approaches the fluid optimum") {
  const ModelInstance m = test::load_scenario("mmsm-2class");
  const double v = structured_optimum(m).objective;
  SimConfig c;
  c.r = 100.0;
  c.seed = 2;
  const SimulationResult r = simulate(m, abandonment_policy(m), c);
  CHECK(std::fabs(r.estimate - v) <= 0.05 * v);
  CHECK_FALSE(r.unstable);
}

TEST_CASE("configuration errors") {
  const ModelInstance m = frozen_chain();
  const PriorityPolicy p = make({{0, 0}}, {{0, 1}});
  SimConfig c;
  c.r = 0.0;
  CHECK_THROWS_AS(simulate(m, p, c), OutOfRange);
  c.r = 1.0;
  c.batches = 1;
  CHECK_THROWS_AS(simulate(m, p, c), OutOfRange);
  c.batches = 20;
  c.burn_in = 0.95;
  CHECK_THROWS_AS(simulate(m, p, c), OutOfRange);
  c.burn_in = 0.2;
  CHECK_THROWS_AS(simulate(m, make({{0, 0}}, {}), c), InvalidModel);
  CHECK_THROWS_AS(convergence_study(m, p, {10.0}, c), OutOfRange);
  CHECK_THROWS_AS(convergence_study(m, p, {10.0, 5.0}, c), OutOfRange);
}

TEST_CASE("overloaded system is flagged") {
  // Arrivals outpace the single server and nobody abandons.
  AbandonmentParams p;
  p.lambda = 3.0;
  p.mu = 1.0;
  p.theta = 1e-9;
  p.c = 1.0;
  const ModelInstance m = abandonment_model(std::vector<AbandonmentParams>{p}, 1.0);
  SimConfig c;
  c.r = 20.0;
  c.horizon = 200.0;
  CHECK(simulate(m, make({{0, 0}}, {}), c).unstable);
  CHECK_FALSE(simulate(infinite_server(2.0, 0.5), make({}, {{0, 0}}), c).unstable);
}
