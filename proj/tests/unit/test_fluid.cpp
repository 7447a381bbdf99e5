#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rmab/errors.hpp"
#include "rmab/fluid.hpp"
#include "rmab/lp.hpp"
#include "rmab/policy.hpp"

using namespace rmab;

namespace {

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double sup_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::vector<double> total(const EquilibriumPoint& eq) {
  std::vector<double> x(eq.passive.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = eq.passive[i] + eq.active[i];
  return x;
}

std::vector<double> initial(const ModelInstance& m) {
  std::vector<double> x;
  for (const auto& row : m.fixed()->counts) x.insert(x.end(), row.begin(), row.end());
  return x;
}

PriorityPolicy make(std::vector<StateId> order, std::vector<StateId> never) {
  PriorityPolicy p;
  p.order = std::move(order);
  p.never_active = std::move(never);
  return p;
}

std::vector<AbandonmentParams> mmsm_params() {
  AbandonmentParams a, b;
  a.lambda = 0.5;
  a.mu = 1.0;
  a.theta = 1.0;
  a.c = 2.0;
  b.lambda = 1.0;
  b.mu = 1.0;
  b.theta = 1.0;
  b.c = 1.0;
  return {a, b};
}

}  // namespace

TEST_CASE("water-filling allocation") {
  ModelInstance m;
  m.classes = {BanditClass::zeros(1), BanditClass::zeros(1)};
  const StateIndexer idx(m);
  const PriorityPolicy p = make({{0, 0}, {1, 0}}, {});
  const Allocation a = fluid_allocation(idx, p, 1.0, {0.4, 0.9});
  CHECK(a.active[0] == doctest::Approx(0.4));
  CHECK(a.active[1] == doctest::Approx(0.6));
  CHECK(a.passive[1] == doctest::Approx(0.3));

  const Allocation slack = fluid_allocation(idx, p, 5.0, {0.4, 0.9});
  CHECK(slack.active == std::vector<double>{0.4, 0.9});

  const Allocation excluded = fluid_allocation(idx, make({{0, 0}}, {{1, 0}}), 10.0, {1.0, 5.0});
  CHECK(excluded.active[1] == 0.0);
  CHECK(excluded.passive[1] == 5.0);
}

TEST_CASE("drift vanishes at the structured optimum") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const ModelInstance m = trial % 2 ? test::random_dynamic(rng) : test::random_fixed(rng);
    const EquilibriumPoint eq = structured_optimum(m);
    const auto policies = pi_star_extensions(eq, m.alpha, 4);
    REQUIRE_FALSE(policies.empty());
    CAPTURE(trial);
    for (const PriorityPolicy& p : policies) CHECK(sup_norm(fluid_rhs(m, p, total(eq))) <= 1e-8);
  }
  const ModelInstance ni = test::nonindexable(3.0);
  const EquilibriumPoint eq = structured_optimum(ni);
  CHECK(sup_norm(fluid_rhs(ni, named_policy("prio12", ni), total(eq))) <= 1e-8);
}

TEST_CASE("scalar and empty systems") {
  AbandonmentParams p;
  p.lambda = 1.3;
  p.theta = 0.7;
  p.c = 1.0;
  const ModelInstance m = abandonment_model(std::vector<AbandonmentParams>{p}, 1.0);
  const PriorityPolicy passive = make({}, {{0, 0}});
  for (double x : {0.0, 0.5, 4.0}) CHECK(fluid_rhs(m, passive, {x})[0] == doctest::Approx(1.3 - 0.7 * x));

  ModelInstance empty = m;
  empty.classes[0].arrival_rate = 0.0;
  CHECK(fluid_rhs(empty, passive, {0.0})[0] == 0.0);

  ModelInstance frozen;
  frozen.classes = {BanditClass::zeros(2)};
  frozen.population = FixedPopulation{{{0.3, 0.7}}};
  frozen.alpha = 0.5;
  const Trajectory t = integrate(frozen, make({{0, 1}, {0, 0}}, {}), {0.3, 0.7}, {5.0, 0.1, 10, 0.0});
  for (const auto& s : t.states) CHECK(s == std::vector<double>{0.3, 0.7});
}

TEST_CASE("equilibrium persists under its own policy") {
  for (double x0 : {1.0, 3.0, 5.0, 8.0}) {
    CAPTURE(x0);
    const ModelInstance m = test::nonindexable(x0);
    const EquilibriumPoint eq = structured_optimum(m);
    const PriorityPolicy p = pi_star_extensions(eq, m.alpha, 1).front();
    IntegrateOptions o;
    o.horizon = 100.0;
    o.record_stride = 100;
    const Trajectory t = integrate(m, p, total(eq), o);
    for (const auto& s : t.states) CHECK(sup_dist(s, total(eq)) <= 1e-6);
  }
}

TEST_CASE("two-class abandonment queue reaches the closed form") {
  const auto ps = mmsm_params();
  const ModelInstance m = abandonment_model(ps, 1.0);
  CHECK(m.classes == test::load_scenario("mmsm-2class").classes);
  const auto eq = test::abandonment_equilibrium(ps, 1.0);
  IntegrateOptions o;
  o.horizon = 50.0;
  const Trajectory t = integrate(m, abandonment_policy(m), {0.0, 0.0}, o);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::fabs(t.terminal[k] - eq[k].first - eq[k].second) <= 1e-4);
  CHECK(t.terminal[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(t.terminal[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("integration invariants") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelInstance m = test::random_fixed(rng);
    const StateIndexer idx(m);
    PriorityPolicy p = make(idx.states(), {});
    std::shuffle(p.order.begin(), p.order.end(), rng);
    IntegrateOptions o;
    o.horizon = 20.0;
    o.record_stride = 50;
    CAPTURE(trial);
    const Trajectory t = integrate(m, p, initial(m), o);
    CHECK(t.min_component >= -1e-9);
    for (const auto& s : t.states) {
      for (int k = 0; k < m.num_classes(); ++k) {
        double mass = 0.0;
        for (int j = 0; j < idx.num_states(k); ++j) mass += s[idx.flat({k, j})];
        CHECK(std::fabs(mass - m.class_mass(k)) <= 1e-8);
      }
      const Allocation a = fluid_allocation(idx, p, m.alpha, s);
      double used = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        used += a.active[i];
        CHECK(a.active[i] <= s[i]);
      }
      CHECK(used <= m.alpha + 1e-12);
    }
  }
}

TEST_CASE("step halving changes little") {
  for (const std::string& name : {"prio1", "prio12", "prio21", "prio213"}) {
    const ModelInstance m = test::nonindexable(4.0);
    const PriorityPolicy p = named_policy(name, m);
    IntegrateOptions o;
    o.horizon = 30.0;
    o.step = default_step(m);
    const Trajectory a = integrate(m, p, initial(m), o);
    o.step /= 2.0;
    const Trajectory b = integrate(m, p, initial(m), o);
    CAPTURE(name);
    CHECK(sup_dist(a.terminal, b.terminal) <= 1e-6);
  }
}

TEST_CASE("blow-up is reported") {
  AbandonmentParams p;
  p.lambda = 1.0;
  p.theta = 1.0;
  p.c = 1.0;
  ModelInstance m = abandonment_model(std::vector<AbandonmentParams>{p}, 1.0);
  m.classes[0].gen_passive.at(0, 0) = 0.0;
  m.classes[0].gen_active.at(0, 0) = 0.0;
  m.classes[0].arrival_rate = 1e11;
  IntegrateOptions o;
  o.horizon = 100.0;
  o.step = 0.01;
  CHECK_THROWS_AS(integrate(m, make({}, {{0, 0}}), {2e12}, o), Diverged);
  CHECK_THROWS_AS(integrate(m, make({}, {{0, 0}}), {0.0}, o), Diverged);
}

TEST_CASE("three-state attractor verdicts") {
  struct Case {
    double x0;
    const char* policy;
    bool pass;
  };
  for (const Case& c : {Case{1, "prio1", true}, Case{3, "prio12", false}, Case{5, "prio21", true}}) {
    CAPTURE(c.x0);
    const ModelInstance m = test::nonindexable(c.x0);
    const EquilibriumPoint eq = structured_optimum(m);
    AttractorOptions o;
    o.n_samples = 16;
    const AttractorReport r = attractor_check(m, named_policy(c.policy, m), eq, o);
    CHECK(r.pass == c.pass);
    CHECK(r.total_samples == 16 + 3);
    CHECK(r.verdict() == (c.pass ? "pass (sampled)" : "fail"));
    CHECK((r.converged_count == r.total_samples) == r.pass);
    if (!c.pass) {
      // The limit is some other equilibrium, not x*.
      CHECK(r.max_terminal_distance > 0.1);
      for (const auto& term : r.terminals)
        CHECK(sup_norm(fluid_rhs(m, named_policy(c.policy, m), term)) <= 1e-3);
    }
  }
}

TEST_CASE("attractor check is deterministic and thread-independent") {
  const ModelInstance m = test::nonindexable(4.0);
  const EquilibriumPoint eq = structured_optimum(m);
  AttractorOptions o;
  o.n_samples = 12;
  o.seed = 99;
  o.threads = 1;
  const AttractorReport a = attractor_check(m, named_policy("prio21", m), eq, o);
  o.threads = 4;
  const AttractorReport b = attractor_check(m, named_policy("prio21", m), eq, o);
  CHECK(a.starts == b.starts);
  CHECK(a.terminals == b.terminals);
  CHECK(a.pass);
  o.seed = 100;
  CHECK(attractor_check(m, named_policy("prio21", m), eq, o).starts != a.starts);

  const ModelInstance dyn = test::load_scenario("mmsm-2class");
  const AttractorReport d = attractor_check(dyn, abandonment_policy(dyn), structured_optimum(dyn), o);
  CHECK(d.pass);
  CHECK(d.total_samples == 12 + 2);
  const nlohmann::json j = to_json(d, StateIndexer(dyn));
  CHECK(j["verdict"] == "pass (sampled)");

  std::ostringstream csv;
  IntegrateOptions io;
  io.horizon = 1.0;
  io.record_stride = 10;
  write_trajectory_csv(csv, StateIndexer(m), integrate(m, named_policy("prio21", m), initial(m), io));
  CHECK(csv.str().rfind("t,1.1,1.2,1.3\n", 0) == 0);
}
