#include "fixtures.hpp"

#include <algorithm>

#include "rmab/model_io.hpp"

namespace rmab::test {

std::string scenario_path(const std::string& name) {
  return std::string(RMAB_SCENARIO_DIR) + "/" + name + ".json";
}

ModelInstance load_scenario(const std::string& name) { return load_model(scenario_path(name)); }

ModelInstance nonindexable(double mass, bool hard) {
  ModelInstance m = load_scenario(hard ? "nonindexable-3state-hard" : "nonindexable-3state");
  m.fixed()->counts = {{mass, 0.0, 0.0}};
  return m;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

ModelInstance random_fixed(std::mt19937_64& rng, const RandomFixedOptions& opt) {
  ModelInstance m;
  const int K = uniform_int(rng, 1, opt.max_classes);
  const int total = uniform_int(rng, std::max(1, K), opt.max_bandits);
  // Split the bandits over the classes, at least one each.
  std::vector<int> per_class(K, 1);
  for (int b = K; b < total; ++b) ++per_class[uniform_int(rng, 0, K - 1)];
  FixedPopulation pop;
  for (int k = 0; k < K; ++k) {
    const int J = uniform_int(rng, 1, opt.max_states);
    BanditClass c = BanditClass::zeros(J);
    for (int a : {kPassive, kActive})
      for (int i = 0; i < J; ++i)
        for (int j = 0; j < J; ++j)
          if (i != j) c.generator(a).at(i, j + 1) = uniform(rng, opt.min_rate, 1.0);
    for (int j = 0; j < J; ++j) {
      c.cost_passive[j] = opt.positive_costs ? uniform(rng, 0.1, 2.0) : uniform(rng, -1.0, 1.0);
      c.cost_active[j] = opt.positive_costs ? uniform(rng, 0.1, 2.0) : uniform(rng, -1.0, 1.0);
    }
    std::vector<double> counts(J, 0.0);
    for (int b = 0; b < per_class[k]; ++b) counts[uniform_int(rng, 0, J - 1)] += 1.0;
    pop.counts.push_back(counts);
    m.classes.push_back(std::move(c));
  }
  m.population = std::move(pop);
  m.alpha = total > 1 ? uniform_int(rng, 1, total - 1) : 1;
  return m;
}

ModelInstance random_dynamic(std::mt19937_64& rng, int max_classes, int max_states) {
  ModelInstance m;
  m.population = DynamicPopulation{};
  const int K = uniform_int(rng, 1, max_classes);
  for (int k = 0; k < K; ++k) {
    const int J = uniform_int(rng, 1, max_states);
    BanditClass c = BanditClass::zeros(J);
    c.arrival_rate = uniform(rng, 0.2, 2.0);
    double sum = 0.0;
    for (int j = 0; j < J; ++j) sum += (c.entry_dist[j] = uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : uniform(rng, 0.1, 1.0));
    if (sum == 0.0) c.entry_dist[0] = sum = 1.0;
    for (double& p : c.entry_dist) p /= sum;
    for (int a : {kPassive, kActive})
      for (int i = 0; i < J; ++i) {
        c.generator(a).at(i, 0) = a == kPassive ? uniform(rng, 0.1, 1.0) : uniform(rng, 0.0, 2.0);
        for (int j = 0; j < J; ++j)
          if (i != j && uniform(rng, 0.0, 1.0) < 0.7) c.generator(a).at(i, j + 1) = uniform(rng, 0.0, 1.0);
      }
    for (int j = 0; j < J; ++j) {
      c.cost_passive[j] = uniform(rng, 0.1, 3.0);
      c.cost_active[j] = uniform(rng, -1.0, 3.0);
    }
    m.classes.push_back(std::move(c));
  }
  m.alpha = uniform(rng, 0.1, 2.0 * K);
  return m;
}

AbandonmentParams random_abandonment(std::mt19937_64& rng) {
  AbandonmentParams p;
  p.lambda = uniform(rng, 0.1, 2.0);
  p.mu = uniform(rng, 0.2, 2.0);
  p.theta = uniform(rng, 0.1, 2.0);
  p.theta_tilde = uniform(rng, 0.0, 0.5);
  p.c = uniform(rng, 0.1, 3.0);
  p.c_tilde = uniform(rng, 0.0, 1.0);
  p.d = uniform(rng, 0.0, 2.0);
  p.d_tilde = uniform(rng, 0.0, 1.0);
  return p;
}

}  // namespace rmab::test
