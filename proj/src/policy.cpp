#include "rmab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "rmab/errors.hpp"

namespace rmab {

using nlohmann::json;

std::size_t PriorityPolicy::rank(StateId s) const {
  const auto it = std::find(order.begin(), order.end(), s);
  return it == order.end() ? npos : static_cast<std::size_t>(it - order.begin());
}

bool PriorityPolicy::excluded(StateId s) const {
  return std::find(never_active.begin(), never_active.end(), s) != never_active.end();
}

void check_policy(const PriorityPolicy& policy, const StateIndexer& index) {
  std::set<StateId> seen;
  auto take = [&](StateId s) {
    if (s.k < 0 || s.k >= index.num_classes() || s.j < 0 || s.j >= index.num_states(s.k))
      throw InvalidModel("policy refers to unknown state " + to_label(s));
    if (!seen.insert(s).second) throw InvalidModel("policy lists state " + to_label(s) + " twice");
  };
  for (StateId s : policy.order) take(s);
  for (StateId s : policy.never_active) take(s);
  if (seen.size() != index.size()) throw InvalidModel("policy must cover every state");
}

std::string describe(const PriorityPolicy& policy) {
  bool single = true;
  for (StateId s : policy.order) single = single && s.k == 0 && s.j < 9;
  for (StateId s : policy.never_active) single = single && s.k == 0;
  if (single) {
    if (policy.order.empty()) return "all-passive";
    std::string out = "prio";
    for (StateId s : policy.order) out += std::to_string(s.j + 1);
    return out;
  }
  std::string out;
  for (std::size_t i = 0; i < policy.order.size(); ++i) out += (i ? ">" : "") + to_label(policy.order[i]);
  if (!policy.never_active.empty()) {
    out += "|!";
    for (std::size_t i = 0; i < policy.never_active.size(); ++i)
      out += (i ? "," : "") + to_label(policy.never_active[i]);
  }
  return out;
}

namespace {

StateId parse_label(const std::string& label) {
  const auto dot = label.find('.');
  try {
    if (dot == std::string::npos) throw std::invalid_argument(label);
    return {std::stoi(label.substr(0, dot)) - 1, std::stoi(label.substr(dot + 1)) - 1};
  } catch (const std::exception&) {
    throw InvalidModel("bad state label '" + label + "' (expected k.j)");
  }
}

std::vector<StateId> all_states(const ModelInstance& model) { return StateIndexer(model).states(); }

}  // namespace

json to_json(const PriorityPolicy& policy) {
  json order = json::array(), never = json::array();
  for (StateId s : policy.order) order.push_back(to_label(s));
  for (StateId s : policy.never_active) never.push_back(to_label(s));
  return {{"name", policy.name.empty() ? describe(policy) : policy.name},
          {"order", order},
          {"never_active", never}};
}

PriorityPolicy policy_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("order") || !doc.at("order").is_array())
    throw InvalidModel("policy document needs an 'order' array");
  PriorityPolicy p;
  for (const json& s : doc.at("order")) p.order.push_back(parse_label(s.get<std::string>()));
  if (doc.contains("never_active"))
    for (const json& s : doc.at("never_active")) p.never_active.push_back(parse_label(s.get<std::string>()));
  std::sort(p.never_active.begin(), p.never_active.end());
  p.name = doc.value("name", describe(p));
  return p;
}

PriorityPolicy named_policy(const std::string& name, const ModelInstance& model) {
  PriorityPolicy p;
  p.name = name;
  if (name != "all-passive") {
    if (name.rfind("prio", 0) != 0 || name.size() == 4) throw InvalidModel("unknown policy '" + name + "'");
    for (char ch : name.substr(4)) {
      const int j = ch - '1';
      if (ch < '1' || ch > '9' || model.num_classes() < 1 || j >= model.classes[0].num_states)
        throw InvalidModel("policy '" + name + "' does not match the model");
      p.order.push_back({0, j});
    }
  }
  for (StateId s : all_states(model))
    if (p.rank(s) == PriorityPolicy::npos) p.never_active.push_back(s);
  check_policy(p, StateIndexer(model));
  return p;
}

PolicyConstraints pi_star_constraints(const EquilibriumPoint& eq, double alpha) {
  PolicyConstraints c;
  std::vector<StateId> active_only, split, passive_only;
  for (StateId s : eq.index.states()) {
    switch (classify(eq, s)) {
      case PairRole::ActiveOnly: active_only.push_back(s); break;
      case PairRole::Split: split.push_back(s); break;
      case PairRole::PassiveOnly: passive_only.push_back(s); break;
      case PairRole::Empty: break;
    }
  }
  for (StateId a : active_only) {
    for (StateId b : split) c.must_dominate.emplace_back(a, b);
    for (StateId b : passive_only) c.must_dominate.emplace_back(a, b);
  }
  for (StateId a : split)
    for (StateId b : passive_only) c.must_dominate.emplace_back(a, b);
  if (eq.total_active() < alpha - kConstraintTolerance) c.forced_never_active = passive_only;
  c.must_remain_active = active_only;
  c.must_remain_active.insert(c.must_remain_active.end(), split.begin(), split.end());
  std::sort(c.must_remain_active.begin(), c.must_remain_active.end());
  return c;
}

bool is_in_pi_star(const PriorityPolicy& policy, const EquilibriumPoint& eq, double alpha) {
  try {
    check_policy(policy, eq.index);
  } catch (const InvalidModel&) {
    return false;
  }
  const PolicyConstraints c = pi_star_constraints(eq, alpha);
  for (StateId s : c.forced_never_active)
    if (!policy.excluded(s)) return false;
  for (StateId s : c.must_remain_active)
    if (policy.excluded(s)) return false;
  for (const auto& [a, b] : c.must_dominate) {
    if (policy.excluded(b)) continue;
    const std::size_t ra = policy.rank(a), rb = policy.rank(b);
    if (ra == PriorityPolicy::npos || ra > rb) return false;
  }
  return true;
}

std::vector<PriorityPolicy> pi_star_extensions(const EquilibriumPoint& eq, double alpha, std::size_t limit) {
  const PolicyConstraints c = pi_star_constraints(eq, alpha);
  std::vector<StateId> free;
  for (StateId s : eq.index.states())
    if (std::find(c.forced_never_active.begin(), c.forced_never_active.end(), s) == c.forced_never_active.end())
      free.push_back(s);
  std::map<StateId, std::vector<StateId>> preds;
  for (const auto& [a, b] : c.must_dominate)
    if (std::find(free.begin(), free.end(), b) != free.end()) preds[b].push_back(a);

  std::vector<PriorityPolicy> out;
  std::vector<StateId> prefix;
  std::vector<bool> used(free.size(), false);
  std::function<void()> extend = [&]() {
    if (out.size() >= limit) return;
    if (prefix.size() == free.size()) {
      PriorityPolicy p;
      p.order = prefix;
      p.never_active = c.forced_never_active;
      std::sort(p.never_active.begin(), p.never_active.end());
      p.name = describe(p);
      out.push_back(std::move(p));
      return;
    }
    for (std::size_t i = 0; i < free.size(); ++i) {
      if (used[i]) continue;
      bool ready = true;
      for (StateId a : preds[free[i]])
        ready = ready && std::find(prefix.begin(), prefix.end(), a) != prefix.end();
      if (!ready) continue;
      used[i] = true;
      prefix.push_back(free[i]);
      extend();
      prefix.pop_back();
      used[i] = false;
    }
  };
  extend();
  return out;
}

namespace {

bool in_high_or_split(const PatternInterval& iv, StateId s) {
  return std::find(iv.high.begin(), iv.high.end(), s) != iv.high.end() || (iv.split && *iv.split == s);
}

}  // namespace

PriorityPolicy select_policy(const BreakpointTable& table, double value) {
  const std::size_t i = table.locate(value);
  const PatternInterval& iv = table.intervals[i];
  const std::size_t m = table.intervals.size();
  auto less_capacity = [&](std::size_t n) -> std::optional<std::size_t> {
    if (table.parameter == SweepParameter::Alpha) return n == 0 ? std::nullopt : std::optional(n - 1);
    return n + 1 >= m ? std::nullopt : std::optional(n + 1);
  };

  PriorityPolicy p;
  // Within H, states that keep top priority under tighter budgets go first.
  std::vector<std::pair<int, StateId>> high;
  for (StateId s : iv.high) {
    int run = 0;
    for (auto n = less_capacity(i); n && in_high_or_split(table.intervals[*n], s); n = less_capacity(*n)) ++run;
    high.emplace_back(-run, s);
  }
  std::sort(high.begin(), high.end());
  for (const auto& h : high) p.order.push_back(h.second);
  if (iv.split) p.order.push_back(*iv.split);

  std::vector<std::pair<std::size_t, StateId>> appended;
  for (StateId s : iv.low) {
    std::optional<std::size_t> nearest;
    if (iv.binding) {
      for (std::size_t n = 0; n < m; ++n) {
        if (!table.more_capacity(n, i) || !in_high_or_split(table.intervals[n], s)) continue;
        const std::size_t d = n > i ? n - i : i - n;
        if (!nearest || d < *nearest) nearest = d;
      }
    }
    if (nearest)
      appended.emplace_back(*nearest, s);
    else
      p.never_active.push_back(s);
  }
  std::sort(appended.begin(), appended.end());
  for (const auto& a : appended) p.order.push_back(a.second);
  p.never_active.insert(p.never_active.end(), iv.empty.begin(), iv.empty.end());
  std::sort(p.never_active.begin(), p.never_active.end());
  p.name = describe(p);
  return p;
}

PriorityPolicy selected_policy(const ModelInstance& model) {
  if (model.is_fixed()) {
    const double mass = model.total_mass();
    return select_policy(mass_breakpoints(model, mass), mass);
  }
  return select_policy(alpha_breakpoints(model, 4.0 * model.alpha), model.alpha);
}

std::vector<double> abandonment_index(const ModelInstance& model) {
  std::vector<double> iota;
  for (int k = 0; k < model.num_classes(); ++k) {
    const BanditClass& c = model.classes[k];
    if (c.num_states != 1)
      throw InvalidModel("abandonment index needs single-state classes (class " + std::to_string(k + 1) + ")");
    const double theta = c.departure_rate(0, kPassive);
    if (!(theta > 0.0))
      throw InvalidModel("abandonment index needs a positive abandonment rate (class " + std::to_string(k + 1) + ")");
    const double served = c.departure_rate(0, kActive);
    iota.push_back(served * c.cost_passive[0] / theta - c.cost_active[0]);
  }
  return iota;
}

PriorityPolicy abandonment_policy(const ModelInstance& model) {
  const std::vector<double> iota = abandonment_index(model);
  std::vector<int> classes;
  PriorityPolicy p;
  for (int k = 0; k < model.num_classes(); ++k) {
    if (iota[k] > 1e-9)
      classes.push_back(k);
    else
      p.never_active.push_back({k, 0});
  }
  std::stable_sort(classes.begin(), classes.end(), [&](int a, int b) { return iota[a] > iota[b]; });
  for (int k : classes) p.order.push_back({k, 0});
  p.name = "iota";
  return p;
}

std::optional<EquilibriumPoint> conforming_optimum(const ModelInstance& model, const PriorityPolicy& policy,
                                                   const EquilibriumPoint& canonical) {
  if (is_in_pi_star(policy, canonical, model.alpha)) return canonical;
  const LpProblem base = build_fluid_lp(model);
  const StateIndexer& idx = canonical.index;
  const double slack = 1e-9 * (1.0 + std::fabs(canonical.objective));

  // Rank weights: position in the order, never-active states last.
  std::vector<double> position(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t r = policy.rank(idx.state(i));
    position[i] = r == PriorityPolicy::npos ? static_cast<double>(idx.size() + 1) : static_cast<double>(r + 1);
  }
  std::vector<std::function<double(double)>> shapes{
      [](double r) { return r; }, [](double r) { return std::pow(2.0, r); },
      [](double r) { return std::pow(10.0, r); }};
  for (const auto& shape : shapes) {
    for (int variant = 0; variant < 2; ++variant) {
      LpProblem face = base;
      face.add_le(base.objective, canonical.objective + slack);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const double w = shape(position[i]);
        face.objective[2 * i] = variant == 0 ? 0.0 : -w;  // passive mass on low priority
        face.objective[2 * i + 1] = w;                    // active mass on high priority
      }
      LpSolution sol;
      try {
        sol = solve_lp(face);
      } catch (const Error&) {
        continue;
      }
      EquilibriumPoint eq = make_equilibrium(model, sol.x, sol.basis);
      if (eq.split_count() > 1) {
        auto r = support_restricted_optimum(model, eq);
        if (!r) continue;
        eq = *r;
      }
      if (std::fabs(eq.objective - canonical.objective) > 1e-7 * (1.0 + std::fabs(canonical.objective))) continue;
      if (is_in_pi_star(policy, eq, model.alpha)) return eq;
    }
  }
  return std::nullopt;
}

}  // namespace rmab
