#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "rmab/model.hpp"
#include "rmab/policy.hpp"

namespace rmab {

enum class IndexCriterion { Discounted, Limit };

struct WhittleIndexTable {
  int class_index = 0;
  IndexCriterion criterion = IndexCriterion::Discounted;
  std::vector<double> betas;        // one entry for a discounted table
  std::vector<double> values;       // per state; +-inf when the bracket escaped
  std::vector<bool> converged;      // per state (limit tables)
  std::vector<std::vector<double>> history;  // per beta, per state
  bool indexable = true;
  double dummy_index = 0.0;
};

struct WhittleOptions {
  double tolerance = 1e-7;  // bisection width on nu
  int grid_points = 200;    // indexability sweep
  double vi_tol = 1e-10;
};

/// Discounted index of every state of class k at rate beta, with the
/// passive-set monotonicity check. Throws NotIndexable with a witness.
WhittleIndexTable whittle_index(const ModelInstance& model, int k, double beta,
                                const WhittleOptions& options = {});

/// Indices along a strictly decreasing beta sequence (at least 4 values); the
/// estimate is the value at the smallest beta.
WhittleIndexTable whittle_limit(const ModelInstance& model, int k,
                                const std::vector<double>& betas = {1e-1, 1e-2, 1e-3, 1e-4},
                                const WhittleOptions& options = {});

/// Index policy: states with index > 1e-9 by decreasing index (ties
/// lexicographic), the rest never active. Refuses non-indexable tables.
PriorityPolicy whittle_policy(const std::vector<WhittleIndexTable>& tables);

nlohmann::json to_json(const WhittleIndexTable& table);
/// Columns k, j, beta, nu.
void write_whittle_csv(std::ostream& out, const std::vector<WhittleIndexTable>& tables);

}  // namespace rmab
