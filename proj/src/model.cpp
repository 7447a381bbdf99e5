#include "rmab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rmab/errors.hpp"

namespace rmab {

std::string to_label(StateId s) { return std::to_string(s.k + 1) + "." + std::to_string(s.j + 1); }

NotIndexable::NotIndexable(int class_index, int state, double nu_low, double nu_high)
    : Error("NotIndexable",
            "class " + std::to_string(class_index + 1) + " is not indexable: state " +
                std::to_string(state + 1) + " is passive at nu=" + std::to_string(nu_low) +
                " but active at nu=" + std::to_string(nu_high)),
      class_index_(class_index),
      state_(state),
      nu_low_(nu_low),
      nu_high_(nu_high) {}

BanditClass BanditClass::zeros(int num_states) {
  BanditClass c;
  c.num_states = num_states;
  c.entry_dist.assign(num_states, 0.0);
  if (num_states > 0) c.entry_dist[0] = 1.0;
  c.gen_passive = RateMatrix(num_states);
  c.gen_active = RateMatrix(num_states);
  c.cost_passive.assign(num_states, 0.0);
  c.cost_active.assign(num_states, 0.0);
  return c;
}

double BanditClass::outflow(int from, int action) const {
  const RateMatrix& g = generator(action);
  double total = g.at(from, 0);
  for (int to = 0; to < num_states; ++to)
    if (to != from) total += g.at(from, to + 1);
  return total;
}

double BanditClass::rate(int from, int to, int action) const {
  if (from == to) return -outflow(from, action);
  return generator(action).at(from, to + 1);
}

double ModelInstance::class_mass(int k) const {
  const FixedPopulation* f = fixed();
  if (f == nullptr || k >= static_cast<int>(f->counts.size())) return 0.0;
  return std::accumulate(f->counts[k].begin(), f->counts[k].end(), 0.0);
}

double ModelInstance::total_mass() const {
  double m = 0.0;
  for (int k = 0; k < num_classes(); ++k) m += class_mass(k);
  return m;
}

StateIndexer::StateIndexer(const ModelInstance& model) {
  for (int k = 0; k < model.num_classes(); ++k) {
    for (int j = 0; j < model.classes[k].num_states; ++j) states_.push_back({k, j});
    offsets_.push_back(states_.size());
  }
}

namespace {

std::string class_prefix(int k) { return "class " + std::to_string(k + 1) + ": "; }

void check_class(const BanditClass& c, int k, std::vector<std::string>& out) {
  const std::string p = class_prefix(k);
  const auto J = static_cast<std::size_t>(std::max(c.num_states, 0));
  if (c.num_states < 1) {
    out.push_back(p + "num_states must be positive");
    return;
  }
  if (c.entry_dist.size() != J || c.cost_passive.size() != J || c.cost_active.size() != J ||
      c.gen_passive.num_states() != c.num_states || c.gen_active.num_states() != c.num_states) {
    out.push_back(p + "vector and matrix dimensions must match num_states");
    return;
  }
  if (!std::isfinite(c.arrival_rate) || c.arrival_rate < 0.0)
    out.push_back(p + "arrival rate must be finite and nonnegative");

  double sum = 0.0;
  bool entry_ok = true;
  for (double v : c.entry_dist) {
    if (!std::isfinite(v) || v < 0.0) entry_ok = false;
    sum += v;
  }
  if (!entry_ok) out.push_back(p + "entry distribution entries must be finite and nonnegative");
  if (std::fabs(sum - 1.0) > kInputTolerance) out.push_back(p + "entry distribution must sum to 1");

  for (int a : {kPassive, kActive}) {
    const RateMatrix& g = c.generator(a);
    for (int i = 0; i < c.num_states; ++i) {
      for (int col = 0; col <= c.num_states; ++col) {
        if (col == i + 1) continue;
        const double q = g.at(i, col);
        if (!std::isfinite(q) || q < 0.0) {
          std::ostringstream os;
          os << p << "rate q(" << col << "|" << i + 1 << "," << a
             << ") must be finite and nonnegative";
          out.push_back(os.str());
        }
      }
    }
  }
  for (int j = 0; j < c.num_states; ++j) {
    if (!std::isfinite(c.cost_passive[j]) || !std::isfinite(c.cost_active[j])) {
      out.push_back(p + "costs must be finite");
      break;
    }
  }
  if (c.arrival_rate == 0.0) {
    for (int a : {kPassive, kActive})
      for (int i = 0; i < c.num_states; ++i)
        if (c.departure_rate(i, a) != 0.0) {
          out.push_back(p + "a class without arrivals must not have departures");
          return;
        }
  }
}

bool admits_departure(const BanditClass& c) {
  for (int a : {kPassive, kActive})
    for (int i = 0; i < c.num_states; ++i)
      if (c.departure_rate(i, a) > 0.0) return true;
  return false;
}

}  // namespace

ValidationReport validate(const ModelInstance& model) {
  ValidationReport r;
  if (model.classes.empty()) r.violations.push_back("model must have at least one class");
  if (!std::isfinite(model.alpha) || model.alpha <= 0.0)
    r.violations.push_back("alpha must be positive and finite");
  for (int k = 0; k < model.num_classes(); ++k) check_class(model.classes[k], k, r.violations);

  if (const FixedPopulation* f = model.fixed()) {
    for (int k = 0; k < model.num_classes(); ++k)
      if (model.classes[k].arrival_rate != 0.0)
        r.violations.push_back(class_prefix(k) + "fixed population requires λ_k = 0");
    if (f->counts.size() != model.classes.size()) {
      r.violations.push_back("fixed population needs one count vector per class");
    } else {
      for (int k = 0; k < model.num_classes(); ++k) {
        if (f->counts[k].size() != static_cast<std::size_t>(model.classes[k].num_states)) {
          r.violations.push_back(class_prefix(k) + "count vector must have one entry per state");
          continue;
        }
        for (double v : f->counts[k])
          if (!std::isfinite(v) || v < 0.0) {
            r.violations.push_back(class_prefix(k) + "initial counts must be finite and nonnegative");
            break;
          }
      }
    }
  } else {
    for (int k = 0; k < model.num_classes(); ++k) {
      const BanditClass& c = model.classes[k];
      if (!(c.arrival_rate > 0.0))
        r.violations.push_back(class_prefix(k) + "dynamic population requires λ_k > 0");
      if (c.num_states >= 1 && c.gen_passive.num_states() == c.num_states &&
          c.gen_active.num_states() == c.num_states && !admits_departure(c))
        r.violations.push_back(class_prefix(k) + "dynamic class must admit departure");
    }
  }
  return r;
}

void require_valid(const ModelInstance& model) {
  ValidationReport r = validate(model);
  if (r.ok()) return;
  std::string msg = "invalid model:";
  for (const auto& v : r.violations) msg += "\n  " + v;
  throw InvalidModel(msg);
}

ModelInstance exactly_alpha_transform(const ModelInstance& model, double passive_cost) {
  if (!std::isfinite(passive_cost) || passive_cost < 0.0)
    throw InvalidModel("passive cost shift must be finite and nonnegative");
  ModelInstance out = model;
  for (BanditClass& c : out.classes)
    for (double& v : c.cost_passive) v += passive_cost;
  return out;
}

double uniformization_rate(const ModelInstance& model) {
  double qbar = 0.0;
  for (const BanditClass& c : model.classes)
    for (int a : {kPassive, kActive})
      for (int i = 0; i < c.num_states; ++i) qbar = std::max(qbar, c.outflow(i, a));
  return qbar;
}

double min_positive_rate(const ModelInstance& model) {
  double m = 0.0;
  auto consider = [&m](double v) {
    if (v > 0.0 && (m == 0.0 || v < m)) m = v;
  };
  for (const BanditClass& c : model.classes) {
    consider(c.arrival_rate);
    for (int a : {kPassive, kActive})
      for (int i = 0; i < c.num_states; ++i)
        for (int col = 0; col <= c.num_states; ++col)
          if (col != i + 1) consider(c.generator(a).at(i, col));
  }
  return m;
}

BanditClass abandonment_class(const AbandonmentParams& p) {
  BanditClass c = BanditClass::zeros(1);
  c.arrival_rate = p.lambda;
  c.gen_passive.at(0, 0) = p.theta;
  c.gen_active.at(0, 0) = p.mu + p.theta_tilde;
  c.cost_passive[0] = p.c + p.d * p.theta;
  c.cost_active[0] = p.c_tilde + p.d_tilde * p.theta_tilde;
  return c;
}

ModelInstance abandonment_model(std::span<const AbandonmentParams> params, double servers) {
  ModelInstance m;
  m.alpha = servers;
  m.population = DynamicPopulation{};
  for (const AbandonmentParams& p : params) m.classes.push_back(abandonment_class(p));
  return m;
}

}  // namespace rmab
