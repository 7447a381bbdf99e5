#include "rmab/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmab/errors.hpp"
#include "rmab/format.hpp"
#include "rmab/mdp.hpp"

namespace rmab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBracketDoublings = 6;

// Single-bandit solver at a fixed beta that reuses the previous values as a
// warm start.
class ChargeSolver {
 public:
  ChargeSolver(const ModelInstance& model, int k, double beta, double vi_tol)
      : model_(model), k_(k), beta_(beta) {
    opt_.tol = vi_tol;
  }

  // passive[j] is true when passive is optimal at class state j.
  std::vector<bool> passive_set(double nu) {
    const SingleBanditMdp mdp = build_single_bandit(model_, k_, beta_, nu);
    SolveResult r = value_iteration_discounted(mdp, opt_, warm_.empty() ? nullptr : &warm_);
    warm_ = r.values;
    std::vector<bool> d(r.actions.size() - 1);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = r.actions[j + 1] == kPassive;
    return d;
  }

 private:
  const ModelInstance& model_;
  int k_;
  double beta_;
  DiscountedOptions opt_;
  std::vector<double> warm_;
};

double charge_scale(const ModelInstance& model, int k) {
  const BanditClass& c = model.classes[k];
  double cmax = 0.0;
  for (int j = 0; j < c.num_states; ++j)
    cmax = std::max({cmax, std::fabs(c.cost_passive[j]), std::fabs(c.cost_active[j])});
  const double scale = 10.0 * cmax + uniformization_rate(model);
  return scale > 0.0 ? scale : 1.0;
}

// Least charge at which passive is optimal at state j; the upper end of the
// final bracket is returned so a flip at exactly 0 reports 0.
double bisect_index(ChargeSolver& solver, int j, double bound, double tol) {
  double lo = -bound, hi = bound;
  int grow = 0;
  while (solver.passive_set(lo)[j]) {
    if (++grow > kBracketDoublings) return -kInf;
    hi = lo;
    lo *= 2.0;
  }
  grow = 0;
  while (!solver.passive_set(hi)[j]) {
    if (++grow > kBracketDoublings) return kInf;
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (solver.passive_set(mid)[j])
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

void check_monotone(ChargeSolver& solver, int k, const std::vector<double>& values, double bound,
                    int grid_points) {
  std::vector<double> grid;
  const int n = std::max(grid_points, 2);
  for (int i = 0; i < n; ++i) grid.push_back(-bound + 2.0 * bound * i / (n - 1));
  double lo = kInf, hi = -kInf;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    for (double d : {1e-6, 1e-4, 1e-2}) {
      grid.push_back(v - d * (1.0 + std::fabs(v)));
      grid.push_back(v + d * (1.0 + std::fabs(v)));
    }
  }
  if (lo <= hi) {
    const double pad = 1e-3 * (1.0 + hi - lo);
    for (int i = 0; i < n; ++i) grid.push_back(lo - pad + (hi - lo + 2.0 * pad) * i / (n - 1));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<bool> prev;
  double prev_nu = 0.0;
  for (double nu : grid) {
    std::vector<bool> d = solver.passive_set(nu);
    for (std::size_t j = 0; j < prev.size(); ++j)
      if (prev[j] && !d[j]) throw NotIndexable(k, static_cast<int>(j), prev_nu, nu);
    prev = std::move(d);
    prev_nu = nu;
  }
}

}  // namespace

WhittleIndexTable whittle_index(const ModelInstance& model, int k, double beta, const WhittleOptions& options) {
  if (!(beta > 0.0)) throw OutOfRange("discount rate beta must be positive");
  if (k < 0 || k >= model.num_classes()) throw OutOfRange("class index out of range");
  ChargeSolver solver(model, k, beta, options.vi_tol);
  const double bound = charge_scale(model, k);

  WhittleIndexTable t;
  t.class_index = k;
  t.criterion = IndexCriterion::Discounted;
  t.betas = {beta};
  for (int j = 0; j < model.classes[k].num_states; ++j)
    t.values.push_back(bisect_index(solver, j, bound, options.tolerance));
  t.converged.assign(t.values.size(), true);
  t.history = {t.values};
  check_monotone(solver, k, t.values, bound, options.grid_points);
  return t;
}

WhittleIndexTable whittle_limit(const ModelInstance& model, int k, const std::vector<double>& betas,
                                const WhittleOptions& options) {
  if (betas.size() < 4) throw OutOfRange("the beta sequence needs at least 4 values");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw OutOfRange("discount rates must be positive");
    if (i > 0 && !(betas[i] < betas[i - 1])) throw OutOfRange("discount rates must be strictly decreasing");
  }
  WhittleIndexTable t;
  t.class_index = k;
  t.criterion = IndexCriterion::Limit;
  t.betas = betas;
  for (double beta : betas) t.history.push_back(whittle_index(model, k, beta, options).values);
  const std::vector<double>& last = t.history.back();
  const std::vector<double>& prev = t.history[t.history.size() - 2];
  t.values = last;
  for (std::size_t j = 0; j < last.size(); ++j) {
    const bool same_infinity = std::isinf(last[j]) && last[j] == prev[j];
    t.converged.push_back(same_infinity || std::fabs(last[j] - prev[j]) <= 1e-4 * (1.0 + std::fabs(last[j])));
  }
  return t;
}

PriorityPolicy whittle_policy(const std::vector<WhittleIndexTable>& tables) {
  std::vector<std::pair<double, StateId>> ranked;
  PriorityPolicy p;
  for (const WhittleIndexTable& t : tables) {
    if (!t.indexable) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      throw NotIndexable(t.class_index, -1, nan, nan);
    }
    for (std::size_t j = 0; j < t.values.size(); ++j) {
      const StateId s{t.class_index, static_cast<int>(j)};
      if (t.values[j] > 1e-9)
        ranked.emplace_back(t.values[j], s);
      else
        p.never_active.push_back(s);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (const auto& r : ranked) p.order.push_back(r.second);
  std::sort(p.never_active.begin(), p.never_active.end());
  p.name = "whittle";
  return p;
}

nlohmann::json to_json(const WhittleIndexTable& t) {
  nlohmann::json states = nlohmann::json::array();
  for (std::size_t j = 0; j < t.values.size(); ++j) {
    nlohmann::json h = nlohmann::json::array();
    for (const auto& row : t.history) h.push_back(row[j]);
    states.push_back({{"state", to_label({t.class_index, static_cast<int>(j)})},
                      {"nu", t.values[j]},
                      {"converged", static_cast<bool>(t.converged[j])},
                      {"history", h}});
  }
  return {{"class", t.class_index + 1},
          {"criterion", t.criterion == IndexCriterion::Discounted ? "discounted" : "limit"},
          {"betas", t.betas},
          {"indexable", t.indexable},
          {"dummy_index", t.dummy_index},
          {"states", states}};
}

void write_whittle_csv(std::ostream& out, const std::vector<WhittleIndexTable>& tables) {
  CsvWriter csv(out, {"k", "j", "beta", "nu"});
  for (const WhittleIndexTable& t : tables)
    for (std::size_t b = 0; b < t.history.size(); ++b)
      for (std::size_t j = 0; j < t.history[b].size(); ++j) {
        csv.cell(t.class_index + 1).cell(static_cast<int>(j) + 1).cell(t.betas[b]).cell(t.history[b][j]);
        csv.end_row();
      }
}

}  // namespace rmab
