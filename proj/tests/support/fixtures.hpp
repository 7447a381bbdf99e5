#pragma once

#include <random>
#include <string>
#include <vector>

#include "rmab/model.hpp"

namespace rmab::test {

std::string scenario_path(const std::string& name);
ModelInstance load_scenario(const std::string& name);

/// The three-state fixed-population example with all mass in state 1.
ModelInstance nonindexable(double mass, bool hard = false);

struct RandomFixedOptions {
  int max_classes = 2;
  int max_states = 3;
  int max_bandits = 6;
  double min_rate = 0.05;  // every off-diagonal rate is at least this (unichain)
  bool positive_costs = true;
};

/// Fixed population with integer counts, dense positive rates and alpha in
/// {1, ..., total - 1} (or 1 when total is 1).
ModelInstance random_fixed(std::mt19937_64& rng, const RandomFixedOptions& opt = {});

/// Dynamic population with positive passive departure rates in every state
/// (so the all-passive fluid point is feasible) and C(j,0) > 0.
ModelInstance random_dynamic(std::mt19937_64& rng, int max_classes = 3, int max_states = 3);

/// Random abandonment parameters with theta > 0 and positive costs.
AbandonmentParams random_abandonment(std::mt19937_64& rng);

double uniform(std::mt19937_64& rng, double lo, double hi);
int uniform_int(std::mt19937_64& rng, int lo, int hi);

}  // namespace rmab::test
