#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "prospect/cpt.hpp"
#include "prospect/mdp.hpp"
#include "prospect/posynomial.hpp"
#include "prospect/simulate.hpp"
#include "prospect/synthesis.hpp"

namespace prospect {

// ---------------------------------------------------------------------------
// Decimal-string reals
// ---------------------------------------------------------------------------

/// Shortest decimal string that round-trips the double exactly. Model files
/// carry probabilities in this form so fixtures stay stable across toolchains.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& text, const std::string& context) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error(context + ": cannot parse real number from '" + text + "'");
  return value;
}

namespace detail {

inline double json_real(const nlohmann::json& j, const std::string& context) {
  if (j.is_string()) return parse_double(j.get<std::string>(), context);
  if (j.is_number()) return j.get<double>();
  throw std::runtime_error(context + ": expected a number or decimal string");
}

inline const nlohmann::json& json_field(const nlohmann::json& j, const char* key,
                                        const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) throw std::runtime_error(context + ": missing field '" + key + "'");
  return *it;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Weighting / utility / solver blocks
// ---------------------------------------------------------------------------

inline nlohmann::json posynomial_to_json(const Posynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : p.terms)
    terms.push_back({{"c", format_double(t.coeff)}, {"a", format_double(t.exponent)}});
  return terms;
}

inline Posynomial posynomial_from_json(const nlohmann::json& j, const std::string& context) {
  Posynomial p;
  for (const auto& term : j)
    p.terms.push_back({detail::json_real(detail::json_field(term, "c", context), context),
                       detail::json_real(detail::json_field(term, "a", context), context)});
  return p;
}

inline nlohmann::json weighting_to_json(const WeightingSpec& w) {
  switch (w.kind) {
    case WeightingKind::Identity: return {{"kind", "identity"}};
    case WeightingKind::Prelec:
      return {{"kind", "prelec"}, {"beta", format_double(w.beta)}, {"eta", format_double(w.eta)}};
    case WeightingKind::TverskyKahneman:
      return {{"kind", "tk"}, {"eta", format_double(w.eta)}};
    case WeightingKind::PosynomialApprox:
      return {{"kind", "posynomial"}, {"terms", posynomial_to_json(w.approx)}};
  }
  throw std::logic_error("unreachable weighting kind");
}

inline WeightingSpec weighting_from_json(const nlohmann::json& j) {
  const std::string context = "weighting";
  const std::string kind = detail::json_field(j, "kind", context).get<std::string>();
  if (kind == "identity") return WeightingSpec::identity();
  if (kind == "prelec")
    return WeightingSpec::prelec(detail::json_real(detail::json_field(j, "beta", context), context),
                                 detail::json_real(detail::json_field(j, "eta", context), context));
  if (kind == "tk")
    return WeightingSpec::tversky_kahneman(
        detail::json_real(detail::json_field(j, "eta", context), context));
  if (kind == "posynomial")
    return WeightingSpec::posynomial(
        posynomial_from_json(detail::json_field(j, "terms", context), context));
  throw std::runtime_error("weighting: unknown kind '" + kind + "'");
}

inline nlohmann::json utility_to_json(const UtilitySpec& u) {
  switch (u.kind) {
    case UtilityKind::Identity: return {{"kind", "identity"}};
    case UtilityKind::PowerGain:
      return {{"kind", "power_gain"}, {"m", format_double(u.exponent)}};
    case UtilityKind::PowerLoss:
      return {{"kind", "power_loss"},
              {"m", format_double(u.exponent)},
              {"lambda", format_double(u.loss_scale)}};
  }
  throw std::logic_error("unreachable utility kind");
}

inline UtilitySpec utility_from_json(const nlohmann::json& j) {
  const std::string context = "utility";
  const std::string kind = detail::json_field(j, "kind", context).get<std::string>();
  if (kind == "identity") return UtilitySpec::identity();
  if (kind == "power_gain")
    return UtilitySpec::power_gain(detail::json_real(detail::json_field(j, "m", context), context));
  if (kind == "power_loss")
    return UtilitySpec::power_loss(
        detail::json_real(detail::json_field(j, "lambda", context), context),
        detail::json_real(detail::json_field(j, "m", context), context));
  throw std::runtime_error("utility: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

struct ModelFile {
  Mdp mdp;
  std::optional<WeightingSpec> weighting;
  std::optional<UtilitySpec> utility;
  std::optional<SynthesisMode> mode;
  CcpSettings solver;
};

inline std::string mode_to_string(SynthesisMode mode) {
  switch (mode) {
    case SynthesisMode::Reachability: return "reach";
    case SynthesisMode::StateCost: return "cost";
    case SynthesisMode::RewardIdentityUtility: return "reward";
  }
  throw std::logic_error("unreachable mode");
}

inline SynthesisMode mode_from_string(const std::string& s) {
  if (s == "reach") return SynthesisMode::Reachability;
  if (s == "cost") return SynthesisMode::StateCost;
  if (s == "reward") return SynthesisMode::RewardIdentityUtility;
  throw std::runtime_error("unknown synthesis mode '" + s + "'");
}

inline nlohmann::json model_to_json(const ModelFile& file) {
  const Mdp& m = file.mdp;
  nlohmann::json j;
  j["states"] = m.state_names;
  j["initial"] = m.state_names[m.initial];
  j["horizon"] = m.horizon;

  nlohmann::json actions = nlohmann::json::object();
  nlohmann::json transitions = nlohmann::json::object();
  for (int s = 0; s < m.num_states(); ++s) {
    nlohmann::json acts = nlohmann::json::array();
    nlohmann::json trans = nlohmann::json::object();
    for (std::size_t slot = 0; slot < m.enabled[s].size(); ++slot) {
      const std::string& action = m.action_names[m.enabled[s][slot]];
      acts.push_back(action);
      nlohmann::json row = nlohmann::json::object();
      for (const auto& e : m.rows[s][slot])
        row[m.state_names[e.state]] = format_double(e.prob);
      trans[action] = std::move(row);
    }
    actions[m.state_names[s]] = std::move(acts);
    transitions[m.state_names[s]] = std::move(trans);
  }
  j["actions"] = std::move(actions);
  j["transitions"] = std::move(transitions);

  nlohmann::json target = nlohmann::json::array();
  for (int s = 0; s < m.num_states(); ++s)
    if (m.target[s]) target.push_back(m.state_names[s]);
  j["target"] = std::move(target);
  nlohmann::json crash = nlohmann::json::array();
  for (int s = 0; s < m.num_states(); ++s)
    if (m.crash[s]) crash.push_back(m.state_names[s]);
  if (!crash.empty()) j["crash"] = std::move(crash);

  if (m.has_state_cost()) {
    nlohmann::json costs = nlohmann::json::object();
    for (int s = 0; s < m.num_states(); ++s)
      costs[m.state_names[s]] = format_double(m.state_cost[s]);
    j["state_cost"] = std::move(costs);
  }
  if (m.has_sa_reward()) {
    nlohmann::json rewards = nlohmann::json::object();
    for (int s = 0; s < m.num_states(); ++s) {
      nlohmann::json per_action = nlohmann::json::object();
      for (std::size_t slot = 0; slot < m.enabled[s].size(); ++slot) {
        nlohmann::json schedule = nlohmann::json::array();
        for (double r : m.sa_reward[s][slot]) schedule.push_back(format_double(r));
        per_action[m.action_names[m.enabled[s][slot]]] = std::move(schedule);
      }
      rewards[m.state_names[s]] = std::move(per_action);
    }
    j["sa_reward"] = std::move(rewards);
  }

  if (file.weighting) j["weighting"] = weighting_to_json(*file.weighting);
  if (file.utility) j["utility"] = utility_to_json(*file.utility);
  if (file.mode) j["mode"] = mode_to_string(*file.mode);
  j["solver"] = {{"tol", format_double(file.solver.ccp_tol)},
                 {"max_iter", file.solver.ccp_max_iter},
                 {"starts", file.solver.max_vertex_starts}};
  return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  ModelFile file;
  Mdp& m = file.mdp;
  const std::string context = "model";

  for (const auto& name : detail::json_field(j, "states", context))
    m.state_names.push_back(name.get<std::string>());
  const int n = m.num_states();
  m.initial = m.state_index(detail::json_field(j, "initial", context).get<std::string>());
  m.horizon = detail::json_field(j, "horizon", context).get<int>();
  m.target.assign(n, 0);
  m.crash.assign(n, 0);
  m.enabled.resize(n);
  m.rows.resize(n);

  // canonical action catalog: lexicographically sorted union of declared actions
  const auto& actions = detail::json_field(j, "actions", context);
  for (const auto& [state, list] : actions.items())
    for (const auto& a : list) {
      const std::string name = a.get<std::string>();
      if (std::find(m.action_names.begin(), m.action_names.end(), name) == m.action_names.end())
        m.action_names.push_back(name);
    }
  std::sort(m.action_names.begin(), m.action_names.end());

  const auto& transitions = detail::json_field(j, "transitions", context);
  for (const auto& [state_name, list] : actions.items()) {
    const int s = m.state_index(state_name);
    std::vector<std::string> declared;
    for (const auto& a : list) declared.push_back(a.get<std::string>());
    std::sort(declared.begin(), declared.end());
    for (const auto& action_name : declared) {
      const int a = static_cast<int>(
          std::find(m.action_names.begin(), m.action_names.end(), action_name) -
          m.action_names.begin());
      TransitionRow row;
      if (transitions.contains(state_name) && transitions[state_name].contains(action_name)) {
        for (const auto& [succ, p] : transitions[state_name][action_name].items())
          row.push_back({m.state_index(succ),
                         detail::json_real(p, "transition " + state_name + "/" + action_name)});
        std::sort(row.begin(), row.end(),
                  [](const TransitionEntry& x, const TransitionEntry& y) { return x.state < y.state; });
      }
      m.enabled[s].push_back(a);
      m.rows[s].push_back(std::move(row));
    }
  }

  if (j.contains("target"))
    for (const auto& name : j["target"]) m.target[m.state_index(name.get<std::string>())] = 1;
  if (j.contains("crash"))
    for (const auto& name : j["crash"]) m.crash[m.state_index(name.get<std::string>())] = 1;

  if (j.contains("state_cost")) {
    m.state_cost.assign(n, 0.0);
    for (const auto& [name, c] : j["state_cost"].items())
      m.state_cost[m.state_index(name)] = detail::json_real(c, "state_cost " + name);
  }
  if (j.contains("sa_reward")) {
    m.sa_reward.resize(n);
    for (int s = 0; s < n; ++s)
      m.sa_reward[s].assign(m.enabled[s].size(), std::vector<double>(m.horizon, 0.0));
    for (const auto& [state_name, per_action] : j["sa_reward"].items()) {
      const int s = m.state_index(state_name);
      for (const auto& [action_name, schedule] : per_action.items()) {
        const int a = static_cast<int>(
            std::find(m.action_names.begin(), m.action_names.end(), action_name) -
            m.action_names.begin());
        const auto& en = m.enabled[s];
        auto it = std::find(en.begin(), en.end(), a);
        if (it == en.end())
          throw std::runtime_error("sa_reward: action '" + action_name +
                                   "' not enabled at state " + state_name);
        const std::size_t slot = static_cast<std::size_t>(it - en.begin());
        const std::string where = "sa_reward " + state_name + "/" + action_name;
        if (schedule.is_array()) {
          if (static_cast<int>(schedule.size()) != m.horizon)
            throw std::runtime_error(where + ": schedule length != horizon");
          for (int t = 0; t < m.horizon; ++t)
            m.sa_reward[s][slot][t] = detail::json_real(schedule[t], where);
        } else {
          const double r = detail::json_real(schedule, where);
          m.sa_reward[s][slot].assign(m.horizon, r);
        }
      }
    }
  }

  if (j.contains("weighting")) file.weighting = weighting_from_json(j["weighting"]);
  if (j.contains("utility")) file.utility = utility_from_json(j["utility"]);
  if (j.contains("mode")) file.mode = mode_from_string(j["mode"].get<std::string>());
  if (j.contains("solver")) {
    const auto& solver = j["solver"];
    if (solver.contains("tol")) file.solver.ccp_tol = detail::json_real(solver["tol"], "solver.tol");
    if (solver.contains("max_iter")) file.solver.ccp_max_iter = solver["max_iter"].get<int>();
    if (solver.contains("starts")) file.solver.max_vertex_starts = solver["starts"].get<int>();
  }
  return file;
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": parse error at byte " + std::to_string(e.byte) + ": " +
                             e.what());
  }
  try {
    return model_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_model(const ModelFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << model_to_json(file).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Policy / value table documents
// ---------------------------------------------------------------------------

inline nlohmann::json policy_to_json(const Mdp& m, const PolicyTable& pol) {
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < pol.horizon(); ++t)
    for (int s = 0; s < m.num_states(); ++s)
      for (std::size_t slot = 0; slot < m.enabled[s].size(); ++slot)
        rows.push_back({{"state", m.state_names[s]},
                        {"t", t},
                        {"action", m.action_names[m.enabled[s][slot]]},
                        {"prob", format_double(pol.sigma[t][s][slot])}});
  return {{"policy", std::move(rows)}};
}

inline PolicyTable policy_from_json(const nlohmann::json& j, const Mdp& m) {
  const auto& rows = detail::json_field(j, "policy", "policy document");
  int max_t = -1;
  for (const auto& row : rows) max_t = std::max(max_t, row.at("t").get<int>());
  if (max_t < 0) throw std::runtime_error("policy document: no rows");
  PolicyTable pol;
  pol.sigma.resize(max_t + 1);
  for (int t = 0; t <= max_t; ++t) {
    pol.sigma[t].resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) pol.sigma[t][s].assign(m.enabled[s].size(), 0.0);
  }
  for (const auto& row : rows) {
    const int s = m.state_index(row.at("state").get<std::string>());
    const std::string action = row.at("action").get<std::string>();
    const int a = static_cast<int>(
        std::find(m.action_names.begin(), m.action_names.end(), action) -
        m.action_names.begin());
    const auto& en = m.enabled[s];
    auto it = std::find(en.begin(), en.end(), a);
    if (it == en.end())
      throw std::runtime_error("policy document: action '" + action + "' not enabled at state " +
                               m.state_names[s]);
    pol.sigma[row.at("t").get<int>()][s][it - en.begin()] =
        detail::json_real(row.at("prob"), "policy document");
  }
  return pol;
}

inline nlohmann::json values_to_json(const Mdp& m, const ValueTable& values) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < values.v.size(); ++t)
    for (int s = 0; s < m.num_states(); ++s)
      rows.push_back({{"state", m.state_names[s]},
                      {"t", t},
                      {"value", format_double(values.v[t][s])}});
  return {{"values", std::move(rows)}};
}

inline ValueTable values_from_json(const nlohmann::json& j, const Mdp& m) {
  const auto& rows = detail::json_field(j, "values", "value document");
  int max_t = -1;
  for (const auto& row : rows) max_t = std::max(max_t, row.at("t").get<int>());
  if (max_t < 0) throw std::runtime_error("value document: no rows");
  ValueTable values;
  values.v.assign(max_t + 1, std::vector<double>(m.num_states(), 0.0));
  for (const auto& row : rows)
    values.v[row.at("t").get<int>()][m.state_index(row.at("state").get<std::string>())] =
        detail::json_real(row.at("value"), "value document");
  return values;
}

// ---------------------------------------------------------------------------
// CSV exports
// ---------------------------------------------------------------------------

inline void write_policy_csv(std::ostream& out, const Mdp& m, const PolicyTable& pol) {
  out << "state,t,action,prob\n";
  for (int t = 0; t < pol.horizon(); ++t)
    for (int s = 0; s < m.num_states(); ++s)
      for (std::size_t slot = 0; slot < m.enabled[s].size(); ++slot)
        out << m.state_names[s] << ',' << t << ',' << m.action_names[m.enabled[s][slot]] << ','
            << format_double(pol.sigma[t][s][slot]) << '\n';
}

inline PolicyTable read_policy_csv(std::istream& in, const Mdp& m) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("policy csv: empty input");
  std::vector<std::tuple<int, int, int, double>> entries; // (t, s, slot, prob)
  int max_t = -1;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string state, t_text, action, prob_text;
    if (!std::getline(ss, state, ',') || !std::getline(ss, t_text, ',') ||
        !std::getline(ss, action, ',') || !std::getline(ss, prob_text))
      throw std::runtime_error("policy csv line " + std::to_string(lineno) + ": malformed row");
    const int s = m.state_index(state);
    const int t = std::stoi(t_text);
    auto action_it = std::find(m.action_names.begin(), m.action_names.end(), action);
    if (action_it == m.action_names.end())
      throw std::runtime_error("policy csv line " + std::to_string(lineno) + ": unknown action '" +
                               action + "'");
    const int a = static_cast<int>(action_it - m.action_names.begin());
    const auto& en = m.enabled[s];
    auto slot_it = std::find(en.begin(), en.end(), a);
    if (slot_it == en.end())
      throw std::runtime_error("policy csv line " + std::to_string(lineno) + ": action '" + action +
                               "' not enabled at state " + state);
    entries.emplace_back(t, s, static_cast<int>(slot_it - en.begin()),
                         parse_double(prob_text, "policy csv line " + std::to_string(lineno)));
    max_t = std::max(max_t, t);
  }
  if (max_t < 0) throw std::runtime_error("policy csv: no rows");
  PolicyTable pol;
  pol.sigma.resize(max_t + 1);
  for (int t = 0; t <= max_t; ++t) {
    pol.sigma[t].resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) pol.sigma[t][s].assign(m.enabled[s].size(), 0.0);
  }
  for (const auto& [t, s, slot, p] : entries) pol.sigma[t][s][slot] = p;
  return pol;
}

inline void write_values_csv(std::ostream& out, const Mdp& m, const ValueTable& values) {
  out << "state,t,value\n";
  for (std::size_t t = 0; t < values.v.size(); ++t)
    for (int s = 0; s < m.num_states(); ++s)
      out << m.state_names[s] << ',' << t << ',' << format_double(values.v[t][s]) << '\n';
}

inline void write_trace_csv(std::ostream& out, const Mdp& m,
                            const std::vector<StageTraceEntry>& traces) {
  out << "state,t,ccp_round,objective\n";
  for (const auto& entry : traces) {
    int round = 0;
    for (const auto& trace : entry.traces)
      for (const auto& iterate : trace.iterates)
        out << m.state_names[entry.state] << ',' << entry.t << ',' << round++ << ','
            << format_double(iterate.objective) << '\n';
  }
}

inline void write_simulation_csv(std::ostream& out, const SimulationReport& report) {
  out << "run,cost,crashed,reached\n";
  for (int r = 0; r < report.runs; ++r)
    out << r << ',' << format_double(report.totals[r]) << ',' << int(report.crashed[r]) << ','
        << int(report.reached[r]) << '\n';
}

inline void write_weighting_curve_csv(std::ostream& out, const WeightingSpec& target,
                                      const Posynomial& approx) {
  out << "k,target,approx,error\n";
  for (int i = 0; i <= 1000; ++i) {
    const double k = static_cast<double>(i) / 1000.0;
    const double w = eval_weighting(target, k);
    const double wa = approx(k);
    out << format_double(k) << ',' << format_double(w) << ',' << format_double(wa) << ','
        << format_double(wa - w) << '\n';
  }
}

} // namespace prospect
