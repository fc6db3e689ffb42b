#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prospect/ccp.hpp"
#include "prospect/cpt.hpp"
#include "prospect/mdp.hpp"
#include "prospect/posynomial.hpp"

namespace prospect {

enum class SynthesisMode { Reachability, StateCost, RewardIdentityUtility };

struct CcpSettings {
  double ccp_tol = 1e-6;
  int ccp_max_iter = 50;
  double pg_tol = 1e-8;
  int pg_max_iter = 500;
  int max_vertex_starts = 8;
};

struct SynthesisConfig {
  SynthesisMode mode = SynthesisMode::Reachability;
  Posynomial weighting = Posynomial::identity();
  UtilitySpec utility = UtilitySpec::identity();
  CcpSettings solver;
  int horizon = 0; // 0: use the model's horizon
  bool record_traces = true;
};

struct StageTraceEntry {
  int state = 0;
  int t = 0;
  std::vector<CcpTrace> traces; // one per start
};

struct SynthesisResult {
  PolicyTable policy;
  ValueTable values;
  std::vector<StageTraceEntry> traces;
};

namespace detail {

inline void check_config(const Mdp& m, const SynthesisConfig& cfg) {
  if (auto bad = validate(m); !bad.empty())
    throw std::invalid_argument("synthesis: invalid model: " + bad.front());
  if (auto bad = check_posynomial(cfg.weighting); !bad.empty())
    throw std::invalid_argument("synthesis: invalid weighting posynomial: " + bad.front());
  if (!cfg.utility.is_gains())
    throw std::invalid_argument("synthesis: utility must be a gains utility");
  switch (cfg.mode) {
    case SynthesisMode::Reachability:
      if (!m.has_target())
        throw std::invalid_argument("synthesis: reachability mode needs a nonempty target set");
      break;
    case SynthesisMode::StateCost:
      if (!m.has_state_cost())
        throw std::invalid_argument("synthesis: state-cost mode needs state costs");
      break;
    case SynthesisMode::RewardIdentityUtility:
      if (!m.has_sa_reward())
        throw std::invalid_argument("synthesis: reward mode needs state-action rewards");
      if (cfg.utility.kind != UtilityKind::Identity)
        throw std::invalid_argument("synthesis: reward mode requires the identity utility");
      break;
  }
}

inline OptSense mode_sense(SynthesisMode mode) {
  return mode == SynthesisMode::StateCost ? OptSense::Minimize : OptSense::Maximize;
}

inline DcStageProblem build_for_mode(const Mdp& m, const SynthesisConfig& cfg, int s, int t,
                                     const std::vector<double>& next_values) {
  DcStageProblem prob;
  switch (cfg.mode) {
    case SynthesisMode::Reachability:
      prob = build_stage_objective(s, next_values, m, cfg.weighting, cfg.utility);
      break;
    case SynthesisMode::StateCost:
      prob = build_stage_objective(s, next_values, m, cfg.weighting, cfg.utility,
                                   m.state_cost[s]);
      break;
    case SynthesisMode::RewardIdentityUtility: {
      std::vector<double> reward_row(m.enabled[s].size(), 0.0);
      for (std::size_t slot = 0; slot < reward_row.size(); ++slot)
        reward_row[slot] = m.sa_reward[s][slot][t];
      prob = build_stage_objective(s, next_values, m, cfg.weighting, cfg.utility, 0.0,
                                   &reward_row);
      break;
    }
  }
  prob.sense = mode_sense(cfg.mode);
  return prob;
}

} // namespace detail

/// Backward induction with a CCP stage solve per (state, time). Reachability
/// pins target states to u+(1) with an arbitrary fixed action; the state-cost
/// mode folds the current state's cost into the utility increments and
/// minimizes; the reward mode adds the policy-affine identity-utility reward
/// term and maximizes. Stage solves warm-start from the policy found at the
/// following time step.
inline SynthesisResult synthesize(const Mdp& m, const SynthesisConfig& cfg) {
  detail::check_config(m, cfg);
  const int n = m.num_states();
  const int T = cfg.horizon > 0 ? cfg.horizon : m.horizon;
  if (cfg.mode == SynthesisMode::RewardIdentityUtility && T > m.horizon)
    throw std::invalid_argument("synthesis: horizon exceeds the reward schedule length");

  SynthesisResult result;
  result.values.v.assign(T + 1, std::vector<double>(n, 0.0));
  result.policy.sigma.assign(T, {});
  if (cfg.mode == SynthesisMode::Reachability)
    for (int s = 0; s < n; ++s) result.values.v[T][s] = m.target[s] ? 1.0 : 0.0;

  const double target_value = eval_utility(cfg.utility, 1.0);
  for (int t = T - 1; t >= 0; --t) {
    result.policy.sigma[t].resize(n);
    for (int s = 0; s < n; ++s) {
      if (cfg.mode == SynthesisMode::Reachability && m.target[s]) {
        result.values.v[t][s] = target_value;
        std::vector<double> fixed(m.enabled[s].size(), 0.0);
        fixed[0] = 1.0;
        result.policy.sigma[t][s] = std::move(fixed);
        continue;
      }
      const DcStageProblem prob =
          detail::build_for_mode(m, cfg, s, t, result.values.v[t + 1]);
      std::vector<std::vector<double>> starts;
      if (t + 1 < T && !result.policy.sigma[t + 1][s].empty())
        starts.push_back(result.policy.sigma[t + 1][s]);
      for (auto& start : default_starts(prob.num_actions, cfg.solver.max_vertex_starts))
        starts.push_back(std::move(start));
      StageSolveResult solved =
          ccp_solve_stage(prob, starts, cfg.solver.ccp_tol, cfg.solver.ccp_max_iter,
                          cfg.solver.pg_tol, cfg.solver.pg_max_iter);
      result.values.v[t][s] = solved.value;
      result.policy.sigma[t][s] = std::move(solved.sigma);
      if (cfg.record_traces)
        result.traces.push_back({s, t, std::move(solved.traces)});
    }
  }
  return result;
}

/// Same stagewise recursion with the policy fixed (no maximization); used to
/// score an arbitrary policy under the CPT measure.
inline ValueTable evaluate_policy_cpt(const Mdp& m, const PolicyTable& pol,
                                      const SynthesisConfig& cfg) {
  detail::check_config(m, cfg);
  if (auto bad = check_policy(m, pol); !bad.empty())
    throw std::invalid_argument("evaluate_policy_cpt: invalid policy: " + bad.front());
  const int n = m.num_states();
  const int T = pol.horizon();
  if (cfg.mode == SynthesisMode::RewardIdentityUtility && T > m.horizon)
    throw std::invalid_argument("evaluate_policy_cpt: horizon exceeds the reward schedule");

  ValueTable values;
  values.v.assign(T + 1, std::vector<double>(n, 0.0));
  if (cfg.mode == SynthesisMode::Reachability)
    for (int s = 0; s < n; ++s) values.v[T][s] = m.target[s] ? 1.0 : 0.0;

  const double target_value = eval_utility(cfg.utility, 1.0);
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s) {
      if (cfg.mode == SynthesisMode::Reachability && m.target[s]) {
        values.v[t][s] = target_value;
        continue;
      }
      const DcStageProblem prob = detail::build_for_mode(m, cfg, s, t, values.v[t + 1]);
      values.v[t][s] = stage_objective_value(prob, pol.sigma[t][s]);
    }
  }
  return values;
}

} // namespace prospect
