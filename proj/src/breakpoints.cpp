#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rmab/errors.hpp"
#include "rmab/lp.hpp"

namespace rmab {

using nlohmann::json;

namespace {

constexpr int kGridPoints = 400;

struct Change {
  double at;
  SignPattern pattern;  // pattern to the right of `at`
};

class Sweeper {
 public:
  explicit Sweeper(std::function<ModelInstance(double)> make, double resolution)
      : make_(std::move(make)), resolution_(resolution) {}

  SignPattern pattern(double t) const { return sign_pattern(structured_optimum(make_(t))); }

  // Appends every pattern change in (a, b], given the patterns at both ends.
  void scan(double a, const SignPattern& pa, double b, const SignPattern& pb,
            std::vector<Change>& out) const {
    if (pa == pb) return;
    double lo = a, hi = b;
    SignPattern phi = pb;
    while (hi - lo > resolution_) {
      const double mid = 0.5 * (lo + hi);
      SignPattern pm = pattern(mid);
      if (pm == pa)
        lo = mid;
      else {
        hi = mid;
        phi = std::move(pm);
      }
    }
    out.push_back({0.5 * (lo + hi), phi});
    scan(hi, phi, b, pb, out);
  }

 private:
  std::function<ModelInstance(double)> make_;
  double resolution_;
};

PatternInterval to_interval(const StateIndexer& idx, const SignPattern& sp, double lower, double upper) {
  PatternInterval iv;
  iv.lower = lower;
  iv.upper = upper;
  iv.binding = sp.binding;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const StateId s = idx.state(i);
    switch (sp.roles[i]) {
      case PairRole::ActiveOnly: iv.high.push_back(s); break;
      case PairRole::Split: iv.split = s; break;
      case PairRole::PassiveOnly: iv.low.push_back(s); break;
      case PairRole::Empty: iv.empty.push_back(s); break;
    }
  }
  return iv;
}

bool all_costs_zero(const ModelInstance& m) {
  for (const BanditClass& c : m.classes)
    for (int j = 0; j < c.num_states; ++j)
      if (c.cost_passive[j] != 0.0 || c.cost_active[j] != 0.0) return false;
  return true;
}

BreakpointTable sweep(const ModelInstance& model, double max_value, double resolution,
                      SweepParameter parameter, std::function<ModelInstance(double)> make) {
  if (!(max_value > 0.0) || !std::isfinite(max_value))
    throw OutOfRange("sweep upper limit must be positive and finite");
  if (!(resolution > 0.0)) throw OutOfRange("sweep resolution must be positive");
  const StateIndexer idx(model);
  BreakpointTable table;
  table.parameter = parameter;
  table.alpha = model.alpha;
  table.max_value = max_value;
  const double inf = std::numeric_limits<double>::infinity();
  Sweeper sw(make, resolution);

  if (all_costs_zero(model)) {
    table.degenerate_objective = true;
    table.intervals.push_back(to_interval(idx, sw.pattern(max_value), 0.0, inf));
    return table;
  }

  std::vector<double> grid;
  for (int e = 6; e >= 2; --e) grid.push_back(max_value * std::pow(10.0, -e));
  for (int i = 1; i <= kGridPoints; ++i) grid.push_back(max_value * i / kGridPoints);

  std::vector<SignPattern> patterns;
  for (double t : grid) patterns.push_back(sw.pattern(t));
  std::vector<Change> changes;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    sw.scan(grid[i], patterns[i], grid[i + 1], patterns[i + 1], changes);

  // Transitional patterns that live on less than a few resolution steps are
  // artifacts of degenerate vertices at the breakpoint itself.
  std::vector<Change> merged;
  SignPattern left = patterns.front();
  for (std::size_t i = 0; i < changes.size(); ++i) {
    const bool transient =
        i + 1 < changes.size() && changes[i + 1].at - changes[i].at < 4 * resolution;
    if (transient) {
      changes[i + 1].at = changes[i].at;
      continue;
    }
    if (changes[i].pattern == left) continue;
    merged.push_back(changes[i]);
    left = changes[i].pattern;
  }

  double lower = 0.0;
  SignPattern current = patterns.front();
  for (const Change& c : merged) {
    table.intervals.push_back(to_interval(idx, current, lower, c.at));
    lower = c.at;
    current = c.pattern;
  }
  table.intervals.push_back(to_interval(idx, current, lower, inf));
  return table;
}

}  // namespace

std::vector<double> BreakpointTable::breakpoints() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < intervals.size(); ++i) out.push_back(intervals[i].lower);
  return out;
}

std::size_t BreakpointTable::locate(double value) const {
  if (!(value > 0.0) || value > max_value * (1.0 + 1e-12))
    throw OutOfRange("value " + std::to_string(value) + " is outside the swept range (0, " +
                     std::to_string(max_value) + "]");
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (value < intervals[i].upper) return i;
  return intervals.size() - 1;
}

ModelInstance with_total_mass(const ModelInstance& model, double mass) {
  const double total = model.total_mass();
  if (!model.is_fixed() || !(total > 0.0))
    throw InvalidModel("rescaling the population needs a fixed population with positive mass");
  ModelInstance out = model;
  for (auto& row : out.fixed()->counts)
    for (double& v : row) v *= mass / total;
  return out;
}

BreakpointTable alpha_breakpoints(const ModelInstance& model, double alpha_max, double resolution) {
  require_valid(model);
  return sweep(model, alpha_max, resolution, SweepParameter::Alpha, [&model](double a) {
    ModelInstance m = model;
    m.alpha = a;
    return m;
  });
}

BreakpointTable mass_breakpoints(const ModelInstance& model, double mass_max, double resolution) {
  require_valid(model);
  if (!model.is_fixed()) throw InvalidModel("a mass sweep needs a fixed population");
  with_total_mass(model, 1.0);  // rejects zero mass up front
  return sweep(model, mass_max, resolution, SweepParameter::Mass,
               [&model](double t) { return with_total_mass(model, t); });
}

json to_json(const BreakpointTable& table) {
  auto labels = [](const std::vector<StateId>& v) {
    json a = json::array();
    for (StateId s : v) a.push_back(to_label(s));
    return a;
  };
  json intervals = json::array();
  for (const PatternInterval& iv : table.intervals) {
    intervals.push_back({{"lower", iv.lower},
                         {"upper", std::isinf(iv.upper) ? json("inf") : json(iv.upper)},
                         {"high", labels(iv.high)},
                         {"split", iv.split ? json(to_label(*iv.split)) : json(nullptr)},
                         {"low", labels(iv.low)},
                         {"empty", labels(iv.empty)},
                         {"binding", iv.binding}});
  }
  return {{"parameter", table.parameter == SweepParameter::Alpha ? "alpha" : "mass"},
          {"alpha", table.alpha},
          {"max_value", table.max_value},
          {"degenerate_objective", table.degenerate_objective},
          {"breakpoints", table.breakpoints()},
          {"intervals", intervals}};
}

}  // namespace rmab
