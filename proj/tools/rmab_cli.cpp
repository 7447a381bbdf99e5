// Command-line front end: one subcommand per pipeline stage, every artifact
// written under --out together with a manifest.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmab/errors.hpp"
#include "rmab/fluid.hpp"
#include "rmab/format.hpp"
#include "rmab/kernels.hpp"
#include "rmab/lp.hpp"
#include "rmab/mdp.hpp"
#include "rmab/model_io.hpp"
#include "rmab/policy.hpp"
#include "rmab/sim.hpp"
#include "rmab/whittle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rmab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::string out = "rmab-out";
  std::uint64_t seed = 1;
  std::string format = "json";
  std::string model_file;
  std::string scenario;
  std::optional<double> x0;
  std::optional<double> alpha;
};

// Collects emitted files and writes manifest.json at the end.
class Output {
 public:
  Output(const Globals& g, std::string command, std::vector<std::string> argv)
      : dir_(g.out), command_(std::move(command)), argv_(std::move(argv)), globals_(g) {
    fs::create_directories(dir_);
  }

  void json_file(const std::string& name, const json& doc) {
    std::ofstream f(open(name));
    write_json(f, doc);
  }
  void text_file(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(open(name));
    body(f);
  }
  void finish(const json& inputs) {
    json manifest{{"command", command_},
                  {"argv", argv_},
                  {"version", kVersion},
                  {"kernels", std::string(kernels::isa_name(kernels::active_isa()))},
                  {"seed", globals_.seed},
                  {"inputs", inputs},
                  {"artifacts", artifacts_}};
    std::ofstream f(dir_ / "manifest.json");
    write_json(f, manifest);
  }

 private:
  fs::path open(const std::string& name) {
    artifacts_.push_back(name);
    return dir_ / name;
  }
  fs::path dir_;
  std::string command_;
  std::vector<std::string> argv_;
  const Globals& globals_;
  std::vector<std::string> artifacts_;
};

fs::path scenario_dir() {
  if (const char* env = std::getenv("RMAB_SCENARIO_DIR")) return env;
  return RMAB_DEFAULT_SCENARIO_DIR;
}

ModelInstance load_input(const Globals& g, json& inputs) {
  if (g.model_file.empty() == g.scenario.empty())
    throw CLI::ValidationError("model", "give exactly one of --model or --scenario");
  fs::path path = g.model_file;
  if (!g.scenario.empty()) {
    path = scenario_dir() / (g.scenario + ".json");
    if (!fs::exists(path)) throw InvalidModel("unknown scenario '" + g.scenario + "'");
    inputs["scenario"] = g.scenario;
  }
  inputs["model"] = path.string();
  ModelInstance m = load_model(path);
  if (g.alpha) {
    m.alpha = *g.alpha;
    inputs["alpha"] = *g.alpha;
  }
  if (g.x0) {
    m = with_total_mass(m, *g.x0);
    inputs["x0"] = *g.x0;
  }
  return m;
}

std::vector<int> parse_range(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots)), hi = std::stoi(text.substr(dots + 2));
    for (int x = lo; x <= hi; ++x) out.push_back(x);
    return out;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoi(item));
  return out;
}

std::vector<WhittleIndexTable> whittle_tables(const ModelInstance& m, const std::vector<double>& betas,
                                              const WhittleOptions& opt, std::optional<int> only) {
  std::vector<WhittleIndexTable> tables;
  for (int k = 0; k < m.num_classes(); ++k) {
    if (only && *only != k) continue;
    tables.push_back(betas.size() == 1 ? whittle_index(m, k, betas[0], opt)
                                       : whittle_limit(m, k, betas.empty() ? std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4} : betas, opt));
  }
  return tables;
}

// Builtin names, "selected", "whittle", "iota", or a policy JSON file.
PriorityPolicy resolve_policy(const std::string& spec, const ModelInstance& m) {
  if (spec == "selected") return selected_policy(m);
  if (spec == "whittle") return whittle_policy(whittle_tables(m, {}, {}, std::nullopt));
  if (spec == "iota") return abandonment_policy(m);
  if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
    std::ifstream f(spec);
    if (!f) throw InvalidModel("cannot open policy file '" + spec + "'");
    PriorityPolicy p = policy_from_json(json::parse(f));
    check_policy(p, StateIndexer(m));
    return p;
  }
  return named_policy(spec, m);
}

void add_model_options(CLI::App* cmd, Globals& g) {
  cmd->add_option("--model", g.model_file, "Model JSON file");
  cmd->add_option("--scenario", g.scenario, "Builtin scenario id");
  cmd->add_option("--x0", g.x0, "Rescale a fixed population to this total mass");
  cmd->add_option("--alpha", g.alpha, "Override the activation budget");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restless bandit toolkit: fluid program, priority policies, indices, exact and simulated costs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--format", g.format, "Primary artifact format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  const std::vector<std::string> args(argv, argv + argc);

  std::function<void(Output&, json&)> action;
  auto subcommand = [&](const std::string& name, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_model_options(cmd, g);
    return cmd;
  };

  CLI::App* validate_cmd = subcommand("validate", "Check a model against every invariant");
  validate_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      const ValidationReport rep = validate(m);
      out.json_file("validation.json", {{"ok", rep.ok()}, {"violations", rep.violations}});
      if (!rep.ok()) {
        std::string msg = std::to_string(rep.violations.size()) + " violation(s)";
        for (const auto& v : rep.violations) msg += "; " + v;
        throw InvalidModel(msg);
      }
    };
  });

  std::string sweep;
  double sweep_max = 0.0;
  CLI::App* fluid_cmd = subcommand("fluid", "Solve the fluid program for a structured optimum");
  fluid_cmd->add_option("--sweep", sweep, "Also tabulate breakpoints over alpha or mass")
      ->check(CLI::IsMember({"alpha", "mass"}));
  fluid_cmd->add_option("--max", sweep_max, "Upper end of the sweep");
  fluid_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      const EquilibriumPoint eq = structured_optimum(m);
      if (g.format == "csv")
        out.text_file("equilibrium.csv", [&](std::ostream& o) { write_equilibrium_csv(o, eq); });
      else
        out.json_file("equilibrium.json", to_json(eq));
      if (!sweep.empty()) {
        const double hi = sweep_max > 0.0 ? sweep_max : (sweep == "mass" ? m.total_mass() : 4.0 * m.alpha);
        const BreakpointTable t = sweep == "mass" ? mass_breakpoints(m, hi) : alpha_breakpoints(m, hi);
        out.json_file("breakpoints.json", to_json(t));
      }
    };
  });

  std::size_t extension_limit = 1000;
  CLI::App* policies_cmd = subcommand("policies", "Induced policy constraints, their linear extensions and the selected policy");
  policies_cmd->add_option("--limit", extension_limit, "Maximum number of listed policies")->capture_default_str();
  policies_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      const EquilibriumPoint eq = structured_optimum(m);
      const PolicyConstraints c = pi_star_constraints(eq, m.alpha);
      json dom = json::array(), forced = json::array(), list = json::array();
      for (const auto& [a, b] : c.must_dominate) dom.push_back({to_label(a), to_label(b)});
      for (StateId s : c.forced_never_active) forced.push_back(to_label(s));
      for (const PriorityPolicy& p : pi_star_extensions(eq, m.alpha, extension_limit)) list.push_back(to_json(p));
      out.json_file("policies.json", {{"equilibrium", to_json(eq)},
                                      {"must_dominate", dom},
                                      {"forced_never_active", forced},
                                      {"policies", list},
                                      {"selected", to_json(selected_policy(m))}});
    };
  });

  std::string policy_spec = "selected";
  CLI::App* policy_cmd = subcommand("policy", "Emit one priority policy (selected, whittle, iota or builtin)");
  policy_cmd->add_option("--policy", policy_spec, "Policy to emit")->capture_default_str();
  policy_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      inputs["policy"] = policy_spec;
      out.json_file("policy.json", to_json(resolve_policy(policy_spec, m)));
    };
  });

  std::vector<double> betas;
  WhittleOptions wopt;
  std::optional<int> whittle_class;
  CLI::App* whittle_cmd = subcommand("whittle", "Whittle indices with the indexability check");
  whittle_cmd->add_option("--beta", betas, "One discount rate, or a decreasing sequence for the limit")->delimiter(',');
  whittle_cmd->add_option("--grid", wopt.grid_points, "Indexability grid points")->capture_default_str();
  whittle_cmd->add_option("--class", whittle_class, "Only this class (1-based)");
  whittle_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      std::optional<int> only;
      if (whittle_class) only = *whittle_class - 1;
      const auto tables = whittle_tables(m, betas, wopt, only);
      json doc = json::array();
      for (const auto& t : tables) doc.push_back(to_json(t));
      json result{{"tables", doc}};
      if (!only) result["policy"] = to_json(whittle_policy(tables));
      out.json_file("whittle.json", result);
      out.text_file("whittle.csv", [&](std::ostream& o) { write_whittle_csv(o, tables); });
    };
  });

  AttractorOptions aopt;
  bool write_trajectory = false;
  CLI::App* attractor_cmd = subcommand("attractor", "Sampled global-attractor check of the fluid ODE");
  attractor_cmd->add_option("--policy", policy_spec, "Policy under test")->capture_default_str();
  attractor_cmd->add_option("--samples", aopt.n_samples, "Random initial states")->capture_default_str();
  attractor_cmd->add_option("--tol", aopt.tol, "Terminal distance tolerance")->capture_default_str();
  attractor_cmd->add_option("--horizon", aopt.horizon, "Integration horizon (default 200 / min rate)");
  attractor_cmd->add_flag("--trajectory", write_trajectory, "Also write the trajectory from the model's initial point");
  attractor_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      inputs["policy"] = policy_spec;
      const PriorityPolicy p = resolve_policy(policy_spec, m);
      const EquilibriumPoint eq = structured_optimum(m);
      aopt.seed = g.seed;
      const AttractorReport rep = attractor_check(m, p, eq, aopt);
      json doc = to_json(rep, eq.index);
      doc["policy"] = to_json(p);
      out.json_file("attractor.json", doc);
      if (write_trajectory) {
        std::vector<double> x0(eq.index.size(), 0.0);
        if (const FixedPopulation* f = m.fixed())
          for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = f->counts[eq.index.state(i).k][eq.index.state(i).j];
        IntegrateOptions io;
        io.horizon = aopt.horizon;
        io.record_stride = 100;
        const Trajectory tr = integrate(m, p, x0, io);
        out.text_file("trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, eq.index, tr); });
      }
    };
  });

  SimConfig scfg;
  std::vector<double> r_list;
  CLI::App* simulate_cmd = subcommand("simulate", "Event-driven simulation of the scaled system");
  simulate_cmd->add_option("--policy", policy_spec, "Policy to simulate")->capture_default_str();
  simulate_cmd->add_option("--r", scfg.r, "Scaling")->capture_default_str();
  simulate_cmd->add_option("--horizon", scfg.horizon, "Horizon (default 1e3 / min rate)");
  simulate_cmd->add_option("--burn-in", scfg.burn_in, "Discarded fraction")->capture_default_str();
  simulate_cmd->add_option("--batches", scfg.batches, "Batch count")->capture_default_str();
  simulate_cmd->add_option("--series", scfg.series_interval, "Time-series sampling interval");
  simulate_cmd->add_option("--r-list", r_list, "Run a convergence study over these scalings")->delimiter(',');
  simulate_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      inputs["policy"] = policy_spec;
      const PriorityPolicy p = resolve_policy(policy_spec, m);
      scfg.seed = g.seed;
      const SimulationResult res = simulate(m, p, scfg);
      json doc = to_json(res, StateIndexer(m));
      doc["policy"] = to_json(p);
      out.json_file("simulation.json", doc);
      if (scfg.series_interval > 0.0)
        out.text_file("series.csv", [&](std::ostream& o) { write_series_csv(o, StateIndexer(m), res); });
      if (!r_list.empty()) {
        const auto rows = convergence_study(m, p, r_list, scfg);
        out.text_file("convergence.csv", [&](std::ostream& o) { write_convergence_csv(o, rows); });
      }
    };
  });

  std::vector<std::string> policy_list;
  CLI::App* exact_cmd = subcommand("exact", "Optimal and policy average costs of the population chain");
  exact_cmd->add_option("--policy", policy_list, "Policies to evaluate")->delimiter(',');
  exact_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance m = load_input(g, inputs);
      const SolveResult opt = relative_value_iteration(m);
      json evals = json::array();
      for (const std::string& spec : policy_list) {
        const PriorityPolicy p = resolve_policy(spec, m);
        const SolveResult r = relative_value_iteration(m, p);
        evals.push_back({{"policy", to_json(p)}, {"gain", r.gain}, {"iterations", r.iterations}});
      }
      out.json_file("exact.json", {{"states", static_cast<std::uint64_t>(PopulationMdp::count_states(m))},
                                   {"optimal_gain", opt.gain},
                                   {"iterations", opt.iterations},
                                   {"span", opt.residual},
                                   {"policies", evals}});
    };
  });

  std::string sizes = "1..10";
  int start_state = 1;
  bool no_selected = false;
  CLI::App* gaps_cmd = subcommand("gaps", "Relative sub-optimality gaps over population sizes");
  gaps_cmd->remove_option(gaps_cmd->get_option("--x0"));
  gaps_cmd->add_option("--x0", sizes, "Population sizes, 'a..b' or a comma list")->capture_default_str();
  gaps_cmd->add_option("--state", start_state, "State holding the whole initial population (1-based)")
      ->capture_default_str();
  gaps_cmd->add_option("--policy", policy_list, "Policies to compare")->delimiter(',');
  gaps_cmd->add_flag("--no-selected", no_selected, "Omit the breakpoint-selected policy");
  gaps_cmd->callback([&]() {
    action = [&](Output& out, json& inputs) {
      const ModelInstance base = load_input(g, inputs);
      inputs["x0"] = sizes;
      inputs["state"] = start_state;
      if (policy_list.empty()) policy_list = {"prio1", "prio12", "prio123", "prio2", "prio21", "prio213"};
      std::vector<PriorityPolicy> policies;
      for (const std::string& spec : policy_list) policies.push_back(resolve_policy(spec, base));
      const auto rows = suboptimality_table(
          [&](int x) { return concentrated_population(base, x, start_state - 1); }, policies, parse_range(sizes),
          !no_selected);
      out.text_file("gaps.csv", [&](std::ostream& o) { write_gap_csv(o, rows); });
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Output out(g, app.get_subcommands().front()->get_name(), args);
    json inputs = json::object();
    action(out, inputs);
    out.finish(inputs);
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const NotIndexable& e) {
    json err{{"error", e.code()}, {"message", e.what()}, {"class", e.class_index() + 1}};
    if (e.state() >= 0) err["witness"] = {{"state", e.state() + 1}, {"nu_low", e.nu_low()}, {"nu_high", e.nu_high()}};
    std::cerr << rounded(err).dump() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "IOError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
