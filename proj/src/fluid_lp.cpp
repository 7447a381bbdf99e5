#include <algorithm>
#include <cmath>

#include "rmab/errors.hpp"
#include "rmab/format.hpp"
#include "rmab/lp.hpp"

namespace rmab {

using nlohmann::json;

namespace {

std::size_t column(const StateIndexer& idx, StateId s, int a) {
  return 2 * idx.flat(s) + static_cast<std::size_t>(a);
}

// Balance row of state (k, j): inflow minus outflow of every column of class k.
std::vector<double> balance_row(const ModelInstance& model, const StateIndexer& idx, int k, int j) {
  std::vector<double> row(2 * idx.size(), 0.0);
  const BanditClass& c = model.classes[k];
  for (int i = 0; i < c.num_states; ++i)
    for (int a : {kPassive, kActive}) row[column(idx, {k, i}, a)] = c.rate(i, j, a);
  return row;
}

std::vector<StateAction> column_map(const StateIndexer& idx) {
  std::vector<StateAction> cols;
  for (StateId s : idx.states())
    for (int a : {kPassive, kActive}) cols.push_back({s, a});
  return cols;
}

}  // namespace

LpProblem build_fluid_lp(const ModelInstance& model, double entry_inflation) {
  require_valid(model);
  const StateIndexer idx(model);
  LpProblem p(2 * idx.size());
  p.columns = column_map(idx);
  for (StateId s : idx.states())
    for (int a : {kPassive, kActive}) p.objective[column(idx, s, a)] = model.classes[s.k].cost(s.j, a);

  for (int k = 0; k < model.num_classes(); ++k) {
    const BanditClass& c = model.classes[k];
    for (int j = 0; j < c.num_states; ++j)
      p.add_eq(balance_row(model, idx, k, j), -c.arrival_rate * (c.entry_dist[j] + entry_inflation));
  }
  if (model.is_fixed()) {
    for (int k = 0; k < model.num_classes(); ++k) {
      std::vector<double> row(p.num_vars, 0.0);
      for (int j = 0; j < model.classes[k].num_states; ++j)
        for (int a : {kPassive, kActive}) row[column(idx, {k, j}, a)] = 1.0;
      p.add_eq(std::move(row), model.class_mass(k));
    }
  }
  std::vector<double> budget(p.num_vars, 0.0);
  for (StateId s : idx.states()) budget[column(idx, s, kActive)] = 1.0;
  p.add_le(std::move(budget), model.alpha);
  return p;
}

LpProblem build_relaxed_lp_fixed(const ModelInstance& model) {
  if (!model.is_fixed()) throw InvalidModel("the relaxed program needs a fixed population");
  require_valid(model);
  const StateIndexer idx(model);
  LpProblem p(2 * idx.size());
  p.columns = column_map(idx);
  std::vector<double> budget(p.num_vars, 0.0);
  for (int k = 0; k < model.num_classes(); ++k) {
    const BanditClass& c = model.classes[k];
    const double mass = model.class_mass(k);
    std::vector<double> norm(p.num_vars, 0.0);
    for (int j = 0; j < c.num_states; ++j) {
      p.add_eq(balance_row(model, idx, k, j), 0.0);
      for (int a : {kPassive, kActive}) {
        p.objective[column(idx, {k, j}, a)] = mass * c.cost(j, a);
        norm[column(idx, {k, j}, a)] = 1.0;
      }
      budget[column(idx, {k, j}, kActive)] = mass;
    }
    p.add_eq(std::move(norm), 1.0);
  }
  p.add_le(std::move(budget), model.alpha);
  return p;
}

double EquilibriumPoint::total_active() const {
  double t = 0.0;
  for (double v : active) t += v;
  return t;
}

std::size_t EquilibriumPoint::split_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i] > kPositiveThreshold && passive[i] > kPositiveThreshold) ++n;
  return n;
}

EquilibriumPoint make_equilibrium(const ModelInstance& model, const std::vector<double>& x,
                                  std::vector<std::size_t> basis) {
  EquilibriumPoint eq;
  eq.index = StateIndexer(model);
  eq.alpha = model.alpha;
  eq.passive.assign(eq.index.size(), 0.0);
  eq.active.assign(eq.index.size(), 0.0);
  auto clamp = [](double v) { return v < kPositiveThreshold ? 0.0 : v; };
  for (std::size_t i = 0; i < eq.index.size(); ++i) {
    eq.passive[i] = clamp(x[2 * i]);
    eq.active[i] = clamp(x[2 * i + 1]);
    const StateId s = eq.index.state(i);
    const BanditClass& c = model.classes[s.k];
    eq.objective += c.cost(s.j, kPassive) * eq.passive[i] + c.cost(s.j, kActive) * eq.active[i];
  }
  eq.capacity_binding = eq.total_active() >= model.alpha - kConstraintTolerance;
  eq.basis = std::move(basis);
  return eq;
}

double constraint_residual(const ModelInstance& model, const EquilibriumPoint& eq) {
  const LpProblem p = build_fluid_lp(model);
  std::vector<double> x(p.num_vars);
  for (std::size_t i = 0; i < eq.index.size(); ++i) {
    x[2 * i] = eq.passive[i];
    x[2 * i + 1] = eq.active[i];
  }
  double r = 0.0;
  for (std::size_t i = 0; i < p.eq_rows.size(); ++i) {
    double lhs = 0.0;
    for (std::size_t c = 0; c < p.num_vars; ++c) lhs += p.eq_rows[i][c] * x[c];
    r = std::max(r, std::fabs(lhs - p.eq_rhs[i]));
  }
  r = std::max(r, eq.total_active() - model.alpha);
  for (double v : x) r = std::max(r, -v);
  return r;
}

std::optional<EquilibriumPoint> support_restricted_optimum(const ModelInstance& model,
                                                           const EquilibriumPoint& start) {
  const LpProblem full = build_fluid_lp(model);
  const StateIndexer& idx = start.index;
  std::vector<bool> removed(full.num_vars, false);
  EquilibriumPoint current = start;
  for (std::size_t round = 0; round <= idx.size(); ++round) {
    if (current.split_count() <= 1) return current;
    // Drop columns of zero-mass states and columns with a positive rate into them.
    bool grew = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (current.passive[i] > 0.0 || current.active[i] > 0.0) continue;
      const StateId z = idx.state(i);
      for (std::size_t c = 0; c < full.num_vars; ++c) {
        const StateAction& ca = full.columns[c];
        const bool own = ca.state == z;
        const bool feeds = ca.state.k == z.k && !own &&
                           model.classes[z.k].rate(ca.state.j, z.j, ca.action) > 0.0;
        if ((own || feeds) && !removed[c]) {
          removed[c] = true;
          grew = true;
        }
      }
    }
    if (!grew) return std::nullopt;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < full.num_vars; ++c)
      if (!removed[c]) keep.push_back(c);
    LpProblem sub(keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) sub.objective[c] = full.objective[keep[c]];
    auto project = [&](const std::vector<double>& row) {
      std::vector<double> out(keep.size());
      for (std::size_t c = 0; c < keep.size(); ++c) out[c] = row[keep[c]];
      return out;
    };
    for (std::size_t i = 0; i < full.eq_rows.size(); ++i) sub.add_eq(project(full.eq_rows[i]), full.eq_rhs[i]);
    for (std::size_t i = 0; i < full.le_rows.size(); ++i) sub.add_le(project(full.le_rows[i]), full.le_rhs[i]);
    const LpSolution sol = solve_lp(sub);
    std::vector<double> x(full.num_vars, 0.0);
    for (std::size_t c = 0; c < keep.size(); ++c) x[keep[c]] = sol.x[c];
    current = make_equilibrium(model, x);
  }
  return std::nullopt;
}

std::optional<EquilibriumPoint> perturbed_structured_optimum(const ModelInstance& model,
                                                             double optimal_value) {
  if (model.is_fixed()) return std::nullopt;
  const LpProblem base = build_fluid_lp(model);
  std::vector<std::size_t> previous;
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    LpSolution sol;
    try {
      sol = solve_lp(build_fluid_lp(model, eps));
    } catch (const Error&) {
      previous.clear();
      continue;
    }
    if (!previous.empty() && sol.basis == previous) {
      const auto x = basic_solution(base, sol.basis);
      if (x) {
        const bool feasible = std::all_of(x->begin(), x->end(), [](double v) { return v >= -kPositiveThreshold; });
        EquilibriumPoint eq = make_equilibrium(model, *x, sol.basis);
        if (feasible && eq.split_count() <= 1 &&
            std::fabs(eq.objective - optimal_value) <= 1e-8 * (1.0 + std::fabs(optimal_value)))
          return eq;
      }
    }
    previous = sol.basis;
  }
  return std::nullopt;
}

EquilibriumPoint structured_optimum(const ModelInstance& model) {
  const LpSolution sol = solve_lp(build_fluid_lp(model));
  EquilibriumPoint eq = make_equilibrium(model, sol.x, sol.basis);
  if (eq.split_count() <= 1) return eq;
  if (auto r = support_restricted_optimum(model, eq)) return *r;
  if (auto r = perturbed_structured_optimum(model, eq.objective)) return *r;
  throw StructureNotFound("no optimal vertex with at most one split pair was found");
}

PairRole classify(const EquilibriumPoint& eq, StateId s) {
  const bool p = eq.x(s, kPassive) > kPositiveThreshold;
  const bool a = eq.x(s, kActive) > kPositiveThreshold;
  if (p && a) return PairRole::Split;
  if (a) return PairRole::ActiveOnly;
  if (p) return PairRole::PassiveOnly;
  return PairRole::Empty;
}

SignPattern sign_pattern(const EquilibriumPoint& eq) {
  SignPattern sp;
  for (StateId s : eq.index.states()) sp.roles.push_back(classify(eq, s));
  sp.binding = eq.capacity_binding;
  return sp;
}

std::string role_name(PairRole role) {
  switch (role) {
    case PairRole::ActiveOnly: return "active";
    case PairRole::Split: return "split";
    case PairRole::PassiveOnly: return "passive";
    case PairRole::Empty: return "empty";
  }
  return "?";
}

json to_json(const EquilibriumPoint& eq) {
  json values = json::object();
  json roles = json::object();
  for (StateId s : eq.index.states()) {
    const std::string label = to_label(s);
    values[label + ".0"] = eq.x(s, kPassive);
    values[label + ".1"] = eq.x(s, kActive);
    roles[label] = role_name(classify(eq, s));
  }
  return {{"alpha", eq.alpha},
          {"objective", eq.objective},
          {"capacity_binding", eq.capacity_binding},
          {"values", values},
          {"roles", roles}};
}

void write_equilibrium_csv(std::ostream& out, const EquilibriumPoint& eq) {
  CsvWriter csv(out, {"k", "j", "x0", "x1"});
  for (StateId s : eq.index.states()) {
    csv.cell(s.k + 1).cell(s.j + 1).cell(eq.x(s, kPassive)).cell(eq.x(s, kActive));
    csv.end_row();
  }
}

}  // namespace rmab
