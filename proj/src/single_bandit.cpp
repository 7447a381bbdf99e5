#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "rmab/errors.hpp"
#include "rmab/kernels.hpp"
#include "rmab/mdp.hpp"

namespace rmab {

SingleBanditMdp build_single_bandit(const ModelInstance& model, int k, double beta, double nu) {
  if (!(beta > 0.0)) throw OutOfRange("discount rate beta must be positive");
  if (k < 0 || k >= model.num_classes()) throw OutOfRange("class index out of range");
  const BanditClass& c = model.classes[k];
  double qbar = uniformization_rate(model);
  if (qbar == 0.0) qbar = 1.0;

  SingleBanditMdp mdp;
  mdp.num_states = c.num_states + 1;
  mdp.uniformization = qbar;
  mdp.discount = qbar / (beta + qbar);
  const std::size_t n = static_cast<std::size_t>(mdp.num_states);
  for (int a : {kPassive, kActive}) {
    mdp.cost[a].assign(n, 0.0);
    mdp.transition[a].assign(n, std::vector<double>(n, 0.0));
    mdp.transition[a][0][0] = 1.0;
    for (int i = 0; i < c.num_states; ++i) {
      mdp.cost[a][i + 1] = (c.cost(i, a) + (a == kActive ? nu : 0.0)) / (beta + qbar);
      std::vector<double>& row = mdp.transition[a][i + 1];
      double off = 0.0;
      row[0] = c.departure_rate(i, a) / qbar;
      off += row[0];
      for (int j = 0; j < c.num_states; ++j) {
        if (j == i) continue;
        row[j + 1] = c.rate(i, j, a) / qbar;
        off += row[j + 1];
      }
      row[i + 1] = 1.0 - off;  // complement keeps the row sum at 1
    }
  }
  return mdp;
}

namespace {

double expectation(const std::vector<double>& row, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * v[j];
  return s;
}

double q_value(const SingleBanditMdp& mdp, int a, std::size_t i, const std::vector<double>& v) {
  return mdp.cost[a][i] + mdp.discount * expectation(mdp.transition[a][i], v);
}

}  // namespace

std::vector<double> action_gaps(const SingleBanditMdp& mdp, const std::vector<double>& v) {
  std::vector<double> g(static_cast<std::size_t>(mdp.num_states));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = q_value(mdp, kActive, i, v) - q_value(mdp, kPassive, i, v);
  return g;
}

SolveResult value_iteration_discounted(const SingleBanditMdp& mdp, const DiscountedOptions& opt,
                                       const std::vector<double>* warm_start) {
  const double b = mdp.discount;
  if (!(b < 1.0) || b < 0.0) throw OutOfRange("discount factor must lie in [0, 1)");
  const std::size_t n = static_cast<std::size_t>(mdp.num_states);
  std::vector<double> v(n, 0.0), next(n);
  if (warm_start && warm_start->size() == n) v = *warm_start;
  const double residual_stop = b > 0.0 ? opt.tol * (1.0 - b) / (2.0 * b) : opt.tol;
  // Without departures the absorbing state is a separate closed class whose
  // value is exactly 0; the bounds are then taken over the class states only.
  bool departures = false;
  for (int a : {kPassive, kActive})
    for (std::size_t i = 1; i < n; ++i) departures = departures || mdp.transition[a][i][0] > 0.0;
  const std::size_t first = departures || n == 1 ? 0 : 1;
  if (first == 1) v[0] = 0.0;

  SolveResult r;
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) next[i] = std::min(q_value(mdp, kPassive, i, v), q_value(mdp, kActive, i, v));
    ++r.iterations;
    r.residual = kernels::max_abs_diff(next, v);
    if (r.residual <= residual_stop) {
      v.swap(next);
      break;
    }
    if (opt.macqueen_stop && b > 0.0) {
      // v* lies in [next + b/(1-b) lo, next + b/(1-b) hi]; the bound width
      // is only meaningful above the rounding noise of the values.
      const std::span<const double> tail_next(next.data() + first, n - first), tail_v(v.data() + first, n - first);
      const auto [lo, hi] = kernels::min_max_diff(tail_next, tail_v);
      double scale = 0.0;
      for (double x : tail_next) scale = std::max(scale, std::fabs(x));
      const double width = b / (1.0 - b) * (hi - lo);
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
      if (width <= opt.tol || (hi - lo) <= floor) {
        const double shift = b / (1.0 - b) * 0.5 * (lo + hi);
        for (std::size_t i = first; i < n; ++i) next[i] += shift;
        v.swap(next);
        break;
      }
    }
    v.swap(next);
    if (r.iterations >= opt.max_iterations)
      throw NoConvergence("discounted value iteration did not converge", r.residual);
  }
  r.values = v;
  r.actions.assign(n, kPassive);
  const std::vector<double> gaps = action_gaps(mdp, v);
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::max(1.0, std::fabs(v[i]));
    if (gaps[i] < -1e-12 * scale) r.actions[i] = kActive;
  }
  return r;
}

}  // namespace rmab
