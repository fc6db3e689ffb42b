// Command-line front end: weighting fits, policy synthesis, evaluation,
// simulation and risk-neutral/CPT comparisons over JSON model files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prospect/fit.hpp"
#include "prospect/model_io.hpp"
#include "prospect/scenarios.hpp"
#include "prospect/simulate.hpp"
#include "prospect/synthesis.hpp"

namespace fs = std::filesystem;
using namespace prospect;

namespace {

struct WeightingFlags {
  std::string kind = "default"; // identity | prelec | tk | file | default
  double beta = 0.5;
  double eta = 0.9;
  std::string file;
  std::string basis = "default"; // default | auto | comma-separated exponents
};

struct UtilityFlags {
  std::string kind = "default"; // identity | power | default
  double m = 0.88;
};

void add_weighting_flags(CLI::App* cmd, WeightingFlags& flags) {
  cmd->add_option("--weighting", flags.kind,
                  "weighting function: identity, prelec, tk, or file");
  cmd->add_option("--beta", flags.beta, "Prelec beta parameter");
  cmd->add_option("--eta", flags.eta, "weighting eta parameter");
  cmd->add_option("--weighting-file", flags.file, "JSON file holding a weighting block");
  cmd->add_option("--basis", flags.basis,
                  "fit basis: 'default', 'auto', or comma-separated exponents");
}

void add_utility_flags(CLI::App* cmd, UtilityFlags& flags) {
  cmd->add_option("--utility", flags.kind, "utility function: identity or power");
  cmd->add_option("--m", flags.m, "power utility exponent");
}

std::vector<double> parse_basis(const std::string& text, const WeightingSpec& target) {
  if (text == "default") return default_basis();
  if (text == "auto") return select_basis_greedy(target, default_fit_grid());
  std::vector<double> basis;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) basis.push_back(parse_double(item, "--basis"));
  return basis;
}

WeightingSpec target_from_flags(const WeightingFlags& flags) {
  if (flags.kind == "prelec") return WeightingSpec::prelec(flags.beta, flags.eta);
  if (flags.kind == "tk") return WeightingSpec::tversky_kahneman(flags.eta);
  if (flags.kind == "identity") return WeightingSpec::identity();
  throw std::runtime_error("--weighting must be prelec, tk or identity here");
}

/// Resolves the synthesis posynomial from the flags, falling back to the
/// model document's weighting block, fitting closed-form targets on demand.
Posynomial resolve_weighting(const WeightingFlags& flags, const ModelFile& model) {
  WeightingSpec spec = WeightingSpec::identity();
  if (flags.kind == "default") {
    if (model.weighting) spec = *model.weighting;
  } else if (flags.kind == "file") {
    if (flags.file.empty()) throw std::runtime_error("--weighting file needs --weighting-file");
    std::ifstream in(flags.file);
    if (!in) throw std::runtime_error(flags.file + ": cannot open");
    nlohmann::json j;
    in >> j;
    spec = weighting_from_json(j.contains("weighting") ? j["weighting"] : j);
  } else {
    spec = target_from_flags(flags);
  }
  if (spec.kind == WeightingKind::Identity) return Posynomial::identity();
  if (spec.kind == WeightingKind::PosynomialApprox) return spec.approx;
  const auto [posy, report] =
      fit_posynomial(spec, parse_basis(flags.basis, spec), default_fit_grid());
  return posy;
}

UtilitySpec resolve_utility(const UtilityFlags& flags, const ModelFile& model) {
  if (flags.kind == "default")
    return model.utility.value_or(UtilitySpec::identity());
  if (flags.kind == "identity") return UtilitySpec::identity();
  if (flags.kind == "power") return UtilitySpec::power_gain(flags.m);
  throw std::runtime_error("--utility must be identity or power");
}

SynthesisMode resolve_mode(const std::string& flag, const ModelFile& model) {
  if (!flag.empty()) return mode_from_string(flag);
  if (model.mode) return *model.mode;
  return SynthesisMode::Reachability;
}

void require_valid(const Mdp& m) {
  const auto violations = validate(m);
  if (!violations.empty())
    throw std::runtime_error("invalid model: " + violations.front() +
                             (violations.size() > 1
                                  ? " (+" + std::to_string(violations.size() - 1) + " more)"
                                  : ""));
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  writer(out);
}

PolicyTable load_policy(const std::string& path, const Mdp& m) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return read_policy_csv(in, m);
}

int cmd_fit_weighting(const WeightingFlags& flags, bool normalize, const std::string& out_dir) {
  const WeightingSpec target = target_from_flags(flags);
  FitOptions options;
  options.normalize = normalize;
  const auto basis = parse_basis(flags.basis, target);
  const auto [posy, report] = fit_posynomial(target, basis, default_fit_grid(), options);

  fs::create_directories(out_dir);
  ModelFile fragment;
  write_file(fs::path(out_dir) / "weighting.json", [&](std::ostream& out) {
    nlohmann::json j;
    j["weighting"] = weighting_to_json(WeightingSpec::posynomial(posy));
    j["fit_report"] = {{"max_abs_error", format_double(report.max_abs_error)},
                       {"mean_abs_error", format_double(report.mean_abs_error)},
                       {"term_count", report.term_count},
                       {"target", report.target_id},
                       {"grid", report.grid_desc},
                       {"warnings", report.warnings}};
    out << j.dump(2) << "\n";
  });
  write_file(fs::path(out_dir) / "weighting_curve.csv",
             [&](std::ostream& out) { write_weighting_curve_csv(out, target, posy); });
  std::cout << "fitted " << report.term_count << " terms to " << report.target_id
            << ": max_abs_error=" << format_double(report.max_abs_error)
            << " mean_abs_error=" << format_double(report.mean_abs_error) << "\n";
  return 0;
}

struct SynthesisInputs {
  ModelFile model;
  SynthesisConfig cfg;
};

SynthesisInputs prepare_synthesis(const std::string& model_path, const std::string& mode_flag,
                                  const WeightingFlags& wflags, const UtilityFlags& uflags,
                                  double tol) {
  SynthesisInputs inputs{load_model(model_path), {}};
  require_valid(inputs.model.mdp);
  inputs.cfg.mode = resolve_mode(mode_flag, inputs.model);
  inputs.cfg.weighting = resolve_weighting(wflags, inputs.model);
  inputs.cfg.utility = resolve_utility(uflags, inputs.model);
  inputs.cfg.solver = inputs.model.solver;
  if (tol > 0.0) inputs.cfg.solver.ccp_tol = tol;
  return inputs;
}

int cmd_synthesize(const std::string& model_path, const std::string& mode_flag,
                   const WeightingFlags& wflags, const UtilityFlags& uflags, double tol,
                   const std::string& out_dir) {
  SynthesisInputs inputs = prepare_synthesis(model_path, mode_flag, wflags, uflags, tol);
  const auto result = synthesize(inputs.model.mdp, inputs.cfg);

  fs::create_directories(out_dir);
  const Mdp& m = inputs.model.mdp;
  write_file(fs::path(out_dir) / "policy.csv",
             [&](std::ostream& out) { write_policy_csv(out, m, result.policy); });
  write_file(fs::path(out_dir) / "values.csv",
             [&](std::ostream& out) { write_values_csv(out, m, result.values); });
  write_file(fs::path(out_dir) / "trace.csv",
             [&](std::ostream& out) { write_trace_csv(out, m, result.traces); });
  std::cout << "synthesized policy: value at initial state "
            << format_double(result.values.v[0][m.initial]) << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& policy_path,
                 const std::string& mode_flag, const WeightingFlags& wflags,
                 const UtilityFlags& uflags, const std::string& out_dir) {
  SynthesisInputs inputs = prepare_synthesis(model_path, mode_flag, wflags, uflags, 0.0);
  const Mdp& m = inputs.model.mdp;
  const PolicyTable pol = load_policy(policy_path, m);
  const ValueTable values = evaluate_policy_cpt(m, pol, inputs.cfg);
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "values.csv",
             [&](std::ostream& out) { write_values_csv(out, m, values); });
  std::cout << "policy value at initial state " << format_double(values.v[0][m.initial]) << "\n";
  return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& policy_path, int runs,
                 std::uint64_t seed, const std::string& out_dir) {
  const ModelFile model = load_model(model_path);
  require_valid(model.mdp);
  const PolicyTable pol = load_policy(policy_path, model.mdp);
  const SimulationReport report = simulate(model.mdp, pol, runs, seed);
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "simulation.csv",
             [&](std::ostream& out) { write_simulation_csv(out, report); });
  std::cout << "runs=" << report.runs << " crash_count=" << report.crash_count
            << " success_count=" << report.success_count << " mean_cost_on_success="
            << format_double(report.mean_total_on_success) << "\n";
  return 0;
}

int cmd_compare(const std::string& model_path, const std::string& mode_flag,
                const WeightingFlags& wflags, const UtilityFlags& uflags, int runs,
                std::uint64_t seed, const std::string& out_dir) {
  SynthesisInputs inputs = prepare_synthesis(model_path, mode_flag, wflags, uflags, 0.0);
  const Mdp& m = inputs.model.mdp;

  // risk-neutral pipeline
  PolicyTable neutral_policy;
  if (inputs.cfg.mode == SynthesisMode::Reachability)
    neutral_policy = value_iteration_reachability(m).second;
  else
    neutral_policy = value_iteration_expected_cost(m).second;

  // CPT pipeline
  const auto cpt = synthesize(m, inputs.cfg);

  const SimulationReport neutral_report = simulate(m, neutral_policy, runs, seed);
  const SimulationReport cpt_report = simulate(m, cpt.policy, runs, seed);
  const double neutral_reach = m.has_target() ? reach_probability(m, neutral_policy) : 0.0;
  const double cpt_reach = m.has_target() ? reach_probability(m, cpt.policy) : 0.0;

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "policy_neutral.csv",
             [&](std::ostream& out) { write_policy_csv(out, m, neutral_policy); });
  write_file(fs::path(out_dir) / "policy_cpt.csv",
             [&](std::ostream& out) { write_policy_csv(out, m, cpt.policy); });
  write_file(fs::path(out_dir) / "simulation_neutral.csv",
             [&](std::ostream& out) { write_simulation_csv(out, neutral_report); });
  write_file(fs::path(out_dir) / "simulation_cpt.csv",
             [&](std::ostream& out) { write_simulation_csv(out, cpt_report); });

  auto emit_row = [&](std::ostream& out, const std::string& name,
                      const SimulationReport& report, double reach) {
    out << name << ',' << format_double(report.mean_total_on_success) << ','
        << report.crash_count << ',' << report.success_count << ',' << format_double(reach)
        << '\n';
  };
  write_file(fs::path(out_dir) / "compare.csv", [&](std::ostream& out) {
    out << "policy,mean_cost_on_success,crash_count,success_count,reach_probability\n";
    emit_row(out, "risk_neutral", neutral_report, neutral_reach);
    emit_row(out, "cpt", cpt_report, cpt_reach);
  });

  std::cout << "policy          mean_cost_on_success  crash_count  success_count  reach_prob\n";
  std::cout << "risk_neutral    " << format_double(neutral_report.mean_total_on_success) << "  "
            << neutral_report.crash_count << "  " << neutral_report.success_count << "  "
            << format_double(neutral_reach) << "\n";
  std::cout << "cpt             " << format_double(cpt_report.mean_total_on_success) << "  "
            << cpt_report.crash_count << "  " << cpt_report.success_count << "  "
            << format_double(cpt_reach) << "\n";
  return 0;
}

int cmd_make_model(const std::string& kind, const std::string& out_path, int width, int height,
                   int horizon, double delta, double obstacle_cost,
                   const std::vector<std::string>& obstacles, const std::string& initial,
                   const std::string& goal) {
  ModelFile file;
  if (kind == "rideshare") {
    file.mdp = build_rideshare(RideshareSpec{});
    file.mode = SynthesisMode::RewardIdentityUtility;
    file.utility = UtilitySpec::identity();
    file.weighting = WeightingSpec::prelec(0.5, 0.9);
  } else if (kind == "gridworld") {
    GridworldSpec spec;
    spec.width = width;
    spec.height = height;
    spec.horizon = horizon;
    spec.delta = delta;
    spec.obstacle_cost = obstacle_cost;
    auto parse_cell = [](const std::string& text) {
      const auto sep = text.find('_');
      if (sep == std::string::npos)
        throw std::runtime_error("cell '" + text + "' must look like x_y");
      return std::pair<int, int>{std::stoi(text.substr(0, sep)), std::stoi(text.substr(sep + 1))};
    };
    if (!initial.empty()) spec.initial = parse_cell(initial);
    if (!goal.empty()) spec.goal = parse_cell(goal);
    for (const auto& cell : obstacles) spec.obstacles.push_back(parse_cell(cell));
    file.mdp = build_gridworld(spec);
    file.mode = SynthesisMode::StateCost;
    file.utility = UtilitySpec::power_gain(0.88);
    file.weighting = WeightingSpec::prelec(0.5, 0.9);
  } else {
    throw std::runtime_error("make-model kind must be gridworld or rideshare");
  }
  const fs::path path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_model(file, out_path);
  std::cout << "wrote " << out_path << " (" << file.mdp.num_states() << " states)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy synthesis for finite-horizon MDPs under CPT risk measures"};
  app.require_subcommand(1);

  // fit-weighting
  auto* fit = app.add_subcommand("fit-weighting", "fit a posynomial to a weighting function");
  WeightingFlags fit_wflags;
  fit_wflags.kind = "prelec";
  bool fit_normalize = false;
  std::string fit_out = "out";
  add_weighting_flags(fit, fit_wflags);
  fit->add_flag("--normalize", fit_normalize, "rescale the coefficients to sum to 1");
  fit->add_option("--out", fit_out, "output directory");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "synthesize a CPT-optimal policy");
  std::string synth_model, synth_mode, synth_out = "out";
  WeightingFlags synth_wflags;
  UtilityFlags synth_uflags;
  double synth_tol = 0.0;
  synth->add_option("--model", synth_model, "model JSON file")->required();
  synth->add_option("--mode", synth_mode, "reach, cost or reward");
  add_weighting_flags(synth, synth_wflags);
  add_utility_flags(synth, synth_uflags);
  synth->add_option("--tol", synth_tol, "CCP stopping tolerance");
  synth->add_option("--out", synth_out, "output directory");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "evaluate a fixed policy under the CPT measure");
  std::string eval_model, eval_policy, eval_mode, eval_out = "out";
  WeightingFlags eval_wflags;
  UtilityFlags eval_uflags;
  eval->add_option("--model", eval_model, "model JSON file")->required();
  eval->add_option("--policy", eval_policy, "policy CSV file")->required();
  eval->add_option("--mode", eval_mode, "reach, cost or reward");
  add_weighting_flags(eval, eval_wflags);
  add_utility_flags(eval, eval_uflags);
  eval->add_option("--out", eval_out, "output directory");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run seeded rollouts of a policy");
  std::string sim_model, sim_policy, sim_out = "out";
  int sim_runs = 500;
  std::uint64_t sim_seed = 0;
  sim->add_option("--model", sim_model, "model JSON file")->required();
  sim->add_option("--policy", sim_policy, "policy CSV file")->required();
  sim->add_option("--runs", sim_runs, "number of rollouts");
  sim->add_option("--seed", sim_seed, "pseudorandom seed");
  sim->add_option("--out", sim_out, "output directory");

  // compare
  auto* cmp = app.add_subcommand("compare",
                                 "risk-neutral vs CPT pipelines on one model, shared seed");
  std::string cmp_model, cmp_mode, cmp_out = "out";
  WeightingFlags cmp_wflags;
  UtilityFlags cmp_uflags;
  int cmp_runs = 500;
  std::uint64_t cmp_seed = 0;
  cmp->add_option("--model", cmp_model, "model JSON file")->required();
  cmp->add_option("--mode", cmp_mode, "reach, cost or reward");
  add_weighting_flags(cmp, cmp_wflags);
  add_utility_flags(cmp, cmp_uflags);
  cmp->add_option("--runs", cmp_runs, "number of rollouts per policy");
  cmp->add_option("--seed", cmp_seed, "shared pseudorandom seed");
  cmp->add_option("--out", cmp_out, "output directory");

  // validate
  auto* check = app.add_subcommand("validate", "check a model document's invariants");
  std::string check_model;
  check->add_option("--model", check_model, "model JSON file")->required();

  // make-model
  auto* make = app.add_subcommand("make-model", "write a benchmark scenario model file");
  std::string make_kind, make_out = "model.json", make_initial, make_goal;
  int make_width = 10, make_height = 10, make_horizon = 30;
  double make_delta = 0.2, make_obstacle_cost = 50.0;
  std::vector<std::string> make_obstacles;
  make->add_option("kind", make_kind, "gridworld or rideshare")->required();
  make->add_option("--out", make_out, "output model path");
  make->add_option("--width", make_width, "gridworld width");
  make->add_option("--height", make_height, "gridworld height");
  make->add_option("--horizon", make_horizon, "horizon");
  make->add_option("--delta", make_delta, "probability of the intended move");
  make->add_option("--obstacle-cost", make_obstacle_cost, "cost of standing on an obstacle");
  make->add_option("--obstacle", make_obstacles, "obstacle cell x_y (repeatable)");
  make->add_option("--initial", make_initial, "initial cell x_y");
  make->add_option("--goal", make_goal, "goal cell x_y");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit_weighting(fit_wflags, fit_normalize, fit_out);
    if (synth->parsed())
      return cmd_synthesize(synth_model, synth_mode, synth_wflags, synth_uflags, synth_tol,
                            synth_out);
    if (eval->parsed())
      return cmd_evaluate(eval_model, eval_policy, eval_mode, eval_wflags, eval_uflags, eval_out);
    if (sim->parsed()) return cmd_simulate(sim_model, sim_policy, sim_runs, sim_seed, sim_out);
    if (cmp->parsed())
      return cmd_compare(cmp_model, cmp_mode, cmp_wflags, cmp_uflags, cmp_runs, cmp_seed,
                         cmp_out);
    if (check->parsed()) {
      const ModelFile model = load_model(check_model);
      const auto violations = validate(model.mdp);
      for (const auto& v : violations) std::cout << v << "\n";
      std::cout << (violations.empty() ? "ok" : std::to_string(violations.size()) + " violations")
                << "\n";
      return violations.empty() ? 0 : 1;
    }
    if (make->parsed())
      return cmd_make_model(make_kind, make_out, make_width, make_height, make_horizon,
                            make_delta, make_obstacle_cost, make_obstacles, make_initial,
                            make_goal);
  } catch (const std::exception& e) {
    std::string message = e.what();
    for (auto& c : message)
      if (c == '"' || c == '\n') c = '\'';
    std::cerr << "{\"error\":\"" << message << "\"}\n";
    return 1;
  }
  return 0;
}
