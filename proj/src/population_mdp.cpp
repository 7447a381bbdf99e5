#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rmab/errors.hpp"
#include "rmab/format.hpp"
#include "rmab/mdp.hpp"

namespace rmab {

namespace {

// Compositions of `total` into `parts` nonnegative parts, lexicographically
// decreasing (all mass in the first part comes first).
void compositions(int total, int parts, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = total; first >= 0; --first) {
    prefix.push_back(first);
    compositions(total - first, parts - 1, prefix, out);
    prefix.pop_back();
  }
}

std::vector<int> integer_counts(const ModelInstance& model) {
  const FixedPopulation* f = model.fixed();
  if (!f) throw InvalidModel("exact solver needs a fixed population");
  std::vector<int> totals;
  for (const auto& row : f->counts) {
    int sum = 0;
    for (double x : row) {
      if (x < 0.0 || std::fabs(x - std::round(x)) > 1e-9)
        throw InvalidModel("exact solver needs integer initial counts");
      sum += static_cast<int>(std::lround(x));
    }
    totals.push_back(sum);
  }
  return totals;
}

void enumerate_allocations(const std::vector<int>& n, std::size_t pos, int left, bool exact,
                           std::vector<int>& m, std::vector<std::vector<int>>& out) {
  if (pos == n.size()) {
    if (!exact || left == 0) out.push_back(m);
    return;
  }
  for (int a = 0; a <= std::min(n[pos], left); ++a) {
    m[pos] = a;
    enumerate_allocations(n, pos + 1, left - a, exact, m, out);
  }
  m[pos] = 0;
}

}  // namespace

double PopulationMdp::count_states(const ModelInstance& model) {
  const std::vector<int> totals = integer_counts(model);
  double count = 1.0;
  for (int k = 0; k < model.num_classes(); ++k) {
    const int x = totals[k], j = model.classes[k].num_states;
    double c = 1.0;
    for (int i = 1; i < j; ++i) c = c * (x + i) / i;
    count *= std::round(c);
  }
  return count;
}

PopulationMdp::PopulationMdp(const ModelInstance& model, std::size_t pair_cap)
    : model_(&model), index_(model) {
  require_valid(model);
  const std::vector<int> totals = integer_counts(model);
  const double states = count_states(model);
  if (states > static_cast<double>(pair_cap))
    throw StateSpaceTooLarge("population chain has " + format_number(states) + " states");
  budget_ = static_cast<int>(std::floor(model.alpha + 1e-9));
  double total = 0.0;
  for (int x : totals) total += x;
  rate_ = uniformization_rate(model) * total;

  const int K = model.num_classes();
  class_compositions_.resize(K);
  class_offset_.assign(K, 1);
  for (int k = 0; k < K; ++k) {
    std::vector<int> prefix;
    compositions(totals[k], model.classes[k].num_states, prefix, class_compositions_[k]);
  }
  for (int k = K - 2; k >= 0; --k) class_offset_[k] = class_offset_[k + 1] * class_compositions_[k + 1].size();

  const std::size_t n_states = static_cast<std::size_t>(states);
  occupancy_.resize(n_states);
  for (std::size_t s = 0; s < n_states; ++s) {
    std::vector<int>& n = occupancy_[s];
    std::size_t rest = s;
    for (int k = 0; k < K; ++k) {
      const auto& part = class_compositions_[k][rest / class_offset_[k]];
      rest %= class_offset_[k];
      n.insert(n.end(), part.begin(), part.end());
    }
  }

  std::vector<int> initial;
  for (const auto& row : model.fixed()->counts)
    for (double x : row) initial.push_back(static_cast<int>(std::lround(x)));
  initial_ = index_of(initial);

  auto build = [&](bool exact) {
    actions_.assign(n_states, {});
    std::size_t pairs = 0;
    for (std::size_t s = 0; s < n_states; ++s) {
      const std::vector<int>& n = occupancy_[s];
      int present = 0;
      for (int x : n) present += x;
      std::vector<int> m(n.size(), 0);
      const int limit = std::min(budget_, present);
      enumerate_allocations(n, 0, limit, exact, m, actions_[s]);
      pairs += actions_[s].size();
      if (pairs > pair_cap) return false;
    }
    return true;
  };
  if (!build(false)) {
    restricted_ = true;
    if (!build(true))
      throw StateSpaceTooLarge("more than " + std::to_string(pair_cap) + " state-action pairs");
  }
}

std::size_t PopulationMdp::index_of(const std::vector<int>& n) const {
  std::size_t s = 0, pos = 0;
  for (std::size_t k = 0; k < class_compositions_.size(); ++k) {
    const auto& list = class_compositions_[k];
    const std::size_t J = list.front().size();
    const std::vector<int> part(n.begin() + static_cast<long>(pos), n.begin() + static_cast<long>(pos + J));
    // Compositions are sorted in decreasing lexicographic order.
    const auto it = std::lower_bound(list.begin(), list.end(), part, std::greater<>());
    if (it == list.end() || *it != part) throw OutOfRange("occupancy vector not in the state space");
    s += static_cast<std::size_t>(it - list.begin()) * class_offset_[k];
    pos += J;
  }
  return s;
}

double PopulationMdp::cost_rate(std::size_t s, const std::vector<int>& m) const {
  const std::vector<int>& n = occupancy_[s];
  double c = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const StateId id = index_.state(i);
    const BanditClass& cls = model_->classes[id.k];
    c += (n[i] - m[i]) * cls.cost_passive[id.j] + m[i] * cls.cost_active[id.j];
  }
  return c;
}

std::vector<PopulationMdp::Transition> PopulationMdp::transitions(std::size_t s, const std::vector<int>& m) const {
  const std::vector<int>& n = occupancy_[s];
  std::vector<Transition> out;
  std::vector<int> target = n;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == 0) continue;
    const StateId from = index_.state(i);
    const BanditClass& cls = model_->classes[from.k];
    for (int j = 0; j < cls.num_states; ++j) {
      if (j == from.j) continue;
      const double r = (n[i] - m[i]) * cls.rate(from.j, j, kPassive) + m[i] * cls.rate(from.j, j, kActive);
      if (r <= 0.0) continue;
      const std::size_t to = index_.flat({from.k, j});
      --target[i];
      ++target[to];
      out.push_back({index_of(target), r});
      ++target[i];
      --target[to];
    }
  }
  return out;
}

std::vector<int> PopulationMdp::greedy_allocation(const std::vector<int>& n, const PriorityPolicy& policy) const {
  std::vector<int> m(n.size(), 0);
  int left = budget_;
  for (StateId s : policy.order) {
    if (left == 0) break;
    const std::size_t i = index_.flat(s);
    m[i] = std::min(n[i], left);
    left -= m[i];
  }
  return m;
}

namespace {

// Per-state movement list independent of the action: rate into `target` is
// n_from q0 + m_from (q1 - q0).
struct Move {
  std::size_t target;
  std::size_t from;
  double passive;  // n_from * q0
  double slope;    // q1 - q0
};

}  // namespace

SolveResult relative_value_iteration(const ModelInstance& model, const std::optional<PriorityPolicy>& policy,
                                     const RviOptions& options) {
  const PopulationMdp mdp(model, options.pair_cap);
  if (policy) check_policy(*policy, mdp.indexer());
  const std::size_t S = mdp.num_states();
  const StateIndexer& idx = mdp.indexer();

  // Candidate allocations per state: the policy's, or the full action set.
  std::vector<std::vector<std::vector<int>>> fixed_actions;
  if (policy) {
    fixed_actions.resize(S);
    for (std::size_t s = 0; s < S; ++s) fixed_actions[s] = {mdp.greedy_allocation(mdp.occupancy(s), *policy)};
  }
  auto candidates = [&](std::size_t s) -> const std::vector<std::vector<int>>& {
    return policy ? fixed_actions[s] : mdp.actions(s);
  };

  SolveResult r;
  const double lambda = mdp.uniformization();
  if (lambda == 0.0) {
    const std::size_t s0 = mdp.initial_state();
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    const auto& acts = candidates(s0);
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const double c = mdp.cost_rate(s0, acts[a]);
      if (c < best) {
        best = c;
        arg = static_cast<int>(a);
      }
    }
    r.gain = best;
    r.values.assign(S, 0.0);
    r.actions.assign(S, 0);
    r.actions[s0] = arg;
    return r;
  }

  std::vector<std::vector<Move>> moves(S);
  std::vector<double> passive_cost(S, 0.0), cost_slope(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const StateId id = idx.state(i);
    cost_slope[i] = model.classes[id.k].cost_active[id.j] - model.classes[id.k].cost_passive[id.j];
  }
  {
    const std::vector<int> none(idx.size(), 0);
    for (std::size_t s = 0; s < S; ++s) {
      passive_cost[s] = mdp.cost_rate(s, none);
      const std::vector<int>& n = mdp.occupancy(s);
      std::vector<int> target = n;
      for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] == 0) continue;
        const StateId from = idx.state(i);
        const BanditClass& cls = model.classes[from.k];
        for (int j = 0; j < cls.num_states; ++j) {
          if (j == from.j) continue;
          const double q0 = cls.rate(from.j, j, kPassive), q1 = cls.rate(from.j, j, kActive);
          if (q0 == 0.0 && q1 == 0.0) continue;
          const std::size_t to = idx.flat({from.k, j});
          --target[i];
          ++target[to];
          moves[s].push_back({mdp.index_of(target), i, n[i] * q0, q1 - q0});
          ++target[i];
          --target[to];
        }
      }
    }
  }

  const double step = options.tau / lambda;
  std::vector<double> h(S, 0.0), th(S), delta(idx.size());
  std::vector<int> best_action(S, 0);
  const std::size_t ref = mdp.initial_state();
  for (;;) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t s = 0; s < S; ++s) {
      double base = 0.0;
      std::fill(delta.begin(), delta.end(), 0.0);
      for (const Move& mv : moves[s]) {
        const double dh = h[mv.target] - h[s];
        base += mv.passive * dh;
        delta[mv.from] += mv.slope * dh;
      }
      const auto& acts = candidates(s);
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t a = 0; a < acts.size(); ++a) {
        double v = 0.0;
        const std::vector<int>& m = acts[a];
        for (std::size_t i = 0; i < m.size(); ++i)
          if (m[i]) v += m[i] * (cost_slope[i] + step * delta[i]);
        if (a == 0 || v < best - 1e-14 * (1.0 + std::fabs(best))) {
          best = v;
          arg = static_cast<int>(a);
        }
      }
      th[s] = passive_cost[s] + h[s] + step * base + best;
      best_action[s] = arg;
      const double d = th[s] - h[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    ++r.iterations;
    r.residual = hi - lo;
    r.gain = 0.5 * (lo + hi);
    const double shift = th[ref];
    for (std::size_t s = 0; s < S; ++s) h[s] = th[s] - shift;
    if (r.residual <= options.tol) break;
    if (r.iterations >= options.max_iterations)
      throw NoConvergence("relative value iteration did not converge", r.residual);
  }
  r.values = h;
  if (policy) {
    // Report positions in the full action list where the allocation appears.
    r.actions.assign(S, -1);
    for (std::size_t s = 0; s < S; ++s) {
      const auto& acts = mdp.actions(s);
      const auto it = std::find(acts.begin(), acts.end(), fixed_actions[s][0]);
      if (it != acts.end()) r.actions[s] = static_cast<int>(it - acts.begin());
    }
  } else {
    r.actions = best_action;
  }
  return r;
}

ModelInstance concentrated_population(const ModelInstance& model, int total, int state) {
  const FixedPopulation* f = model.fixed();
  if (!f) throw InvalidModel("concentrated population needs a fixed model");
  if (model.num_classes() < 1 || state < 0 || state >= model.classes[0].num_states)
    throw OutOfRange("state out of range");
  ModelInstance out = model;
  auto& row = out.fixed()->counts[0];
  std::fill(row.begin(), row.end(), 0.0);
  row[state] = total;
  return out;
}

std::vector<GapRow> suboptimality_table(const std::function<ModelInstance(int)>& instance_at,
                                        const std::vector<PriorityPolicy>& policies, const std::vector<int>& sizes,
                                        bool include_selected, const RviOptions& options) {
  std::optional<BreakpointTable> table;
  if (include_selected && !sizes.empty()) {
    const int largest = *std::max_element(sizes.begin(), sizes.end());
    table = mass_breakpoints(instance_at(largest), static_cast<double>(largest));
  }
  std::vector<GapRow> rows;
  for (int x0 : sizes) {
    const ModelInstance model = instance_at(x0);
    const double g_opt = relative_value_iteration(model, std::nullopt, options).gain;
    std::vector<std::pair<std::string, PriorityPolicy>> list;
    for (const PriorityPolicy& p : policies) list.emplace_back(p.name.empty() ? describe(p) : p.name, p);
    if (table) list.emplace_back("selected", select_policy(*table, static_cast<double>(x0)));
    for (const auto& [name, p] : list) {
      GapRow row;
      row.x0 = x0;
      row.policy = name;
      row.resolved = p.name.empty() ? describe(p) : p.name;
      row.g_opt = g_opt;
      row.g_policy = relative_value_iteration(model, p, options).gain;
      row.absolute = g_opt == 0.0;
      row.gap_percent = row.absolute ? row.g_policy - g_opt : 100.0 * (row.g_policy - g_opt) / std::fabs(g_opt);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows) {
  CsvWriter csv(out, {"X0", "policy", "g_policy", "g_opt", "gap_percent", "absolute", "resolved"});
  for (const GapRow& r : rows) {
    csv.cell(r.x0).cell(r.policy).cell(r.g_policy).cell(r.g_opt).cell(r.gap_percent);
    csv.cell(r.absolute ? 1 : 0).cell(r.resolved);
    csv.end_row();
  }
}

}  // namespace rmab
