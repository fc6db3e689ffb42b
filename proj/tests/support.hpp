#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "prospect/ccp.hpp"
#include "prospect/mdp.hpp"
#include "prospect/rng.hpp"

namespace testsupport {

using namespace prospect;

/// Two-action branching MDP: action a moves 1 -> 3 surely, action b moves
/// 1 -> 2 w.p. 0.6 and 1 -> 4 w.p. 0.4. States 2..4 self-loop.
inline Mdp branching_mdp(int horizon = 1) {
  MdpBuilder b;
  b.add_state("1").add_state("2").add_state("3").add_state("4");
  b.set_initial("1");
  b.add_transition("1", "a", "3", 1.0);
  b.add_transition("1", "b", "2", 0.6);
  b.add_transition("1", "b", "4", 0.4);
  for (const char* s : {"2", "3", "4"}) b.add_transition(s, "stay", s, 1.0);
  b.add_target("4");
  b.set_horizon(horizon);
  return b.build();
}

/// The branching MDP extended with goal/sink states so that at t=1 the
/// reachability values of states 2, 3, 4 are exactly 0.2, 0.5 and 0.9. The
/// stage problem of state 1 at t=0 is then the classic two-action linear
/// program with optimum 0.5 at the deterministic action a.
inline Mdp branching_mdp_extended() {
  MdpBuilder b;
  for (const char* s : {"1", "2", "3", "4", "goal", "sink"}) b.add_state(s);
  b.set_initial("1");
  b.add_transition("1", "a", "3", 1.0);
  b.add_transition("1", "b", "2", 0.6);
  b.add_transition("1", "b", "4", 0.4);
  b.add_transition("2", "go", "goal", 0.2);
  b.add_transition("2", "go", "sink", 0.8);
  b.add_transition("3", "go", "goal", 0.5);
  b.add_transition("3", "go", "sink", 0.5);
  b.add_transition("4", "go", "goal", 0.9);
  b.add_transition("4", "go", "sink", 0.1);
  b.add_transition("goal", "stay", "goal", 1.0);
  b.add_transition("sink", "stay", "sink", 1.0);
  b.add_target("goal");
  b.set_horizon(2);
  return b.build();
}

/// Policy putting the given probabilities on actions a and b of state 1 and
/// the single enabled action elsewhere.
inline PolicyTable branching_policy(const Mdp& m, double pa, double pb) {
  PolicyTable pol;
  pol.sigma.resize(m.horizon);
  for (int t = 0; t < m.horizon; ++t) {
    pol.sigma[t].resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) {
      pol.sigma[t][s].assign(m.enabled[s].size(), 0.0);
      if (m.state_names[s] == "1") {
        pol.sigma[t][s][0] = pa; // actions are sorted, a before b
        pol.sigma[t][s][1] = pb;
      } else {
        pol.sigma[t][s][0] = 1.0;
      }
    }
  }
  return pol;
}

/// Seeded random MDP with dense-enough branching for property tests.
/// Reachability target is always nonempty; cost/reward models are attached by
/// the caller when needed.
inline Mdp random_mdp(SplitMix64& rng, int num_states, int max_actions, int horizon) {
  MdpBuilder b;
  std::vector<std::string> names;
  for (int s = 0; s < num_states; ++s) names.push_back("s" + std::to_string(s));
  for (const auto& n : names) b.add_state(n);
  b.set_initial(names[0]);
  for (int s = 0; s < num_states; ++s) {
    const int actions = 1 + static_cast<int>(rng.next_u64() % max_actions);
    for (int a = 0; a < actions; ++a) {
      const int fanout = 1 + static_cast<int>(rng.next_u64() % std::min(num_states, 4));
      std::vector<int> succ;
      while (static_cast<int>(succ.size()) < fanout) {
        const int sp = static_cast<int>(rng.next_u64() % num_states);
        if (std::find(succ.begin(), succ.end(), sp) == succ.end()) succ.push_back(sp);
      }
      std::vector<double> weights;
      double total = 0.0;
      for (std::size_t i = 0; i < succ.size(); ++i) {
        weights.push_back(0.05 + rng.next_double());
        total += weights.back();
      }
      for (std::size_t i = 0; i < succ.size(); ++i)
        b.add_transition(names[s], "a" + std::to_string(a), names[succ[i]], weights[i] / total);
    }
  }
  const int target = static_cast<int>(rng.next_u64() % num_states);
  b.add_target(names[target]);
  b.set_horizon(horizon);
  return b.build();
}

/// Uniformly random policy on the simplex of each state's enabled actions.
inline PolicyTable random_policy(SplitMix64& rng, const Mdp& m, int horizon) {
  PolicyTable pol;
  pol.sigma.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    pol.sigma[t].resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) {
      auto& d = pol.sigma[t][s];
      d.resize(m.enabled[s].size());
      double total = 0.0;
      for (auto& p : d) {
        p = 0.01 + rng.next_double();
        total += p;
      }
      for (auto& p : d) p /= total;
    }
  }
  return pol;
}

/// Expected-cost / reward oracle: exhaustively enumerates deterministic
/// time-dependent policies and evaluates each by the exact recursion. Only
/// usable on tiny models.
inline double enumerate_optimal_value(const Mdp& m, bool minimize) {
  const int n = m.num_states();
  const int T = m.horizon;
  std::vector<int> slots(n);
  for (int s = 0; s < n; ++s) slots[s] = static_cast<int>(m.enabled[s].size());

  // per-stage choice tables, one digit per state
  long long per_stage = 1;
  for (int s = 0; s < n; ++s) per_stage *= slots[s];
  long long total = 1;
  for (int t = 0; t < T; ++t) total *= per_stage;

  auto stage_choice = [&](long long code, std::vector<int>& choice) {
    for (int s = 0; s < n; ++s) {
      choice[s] = static_cast<int>(code % slots[s]);
      code /= slots[s];
    }
  };

  double best = minimize ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
  std::vector<long long> stage_codes(T);
  for (long long combo = 0; combo < total; ++combo) {
    long long rest = combo;
    for (int t = 0; t < T; ++t) {
      stage_codes[t] = rest % per_stage;
      rest /= per_stage;
    }
    std::vector<double> next(n, 0.0), cur(n, 0.0);
    std::vector<int> choice(n);
    for (int t = T - 1; t >= 0; --t) {
      stage_choice(stage_codes[t], choice);
      for (int s = 0; s < n; ++s) {
        double q = 0.0;
        for (const auto& e : m.rows[s][choice[s]]) q += e.prob * next[e.state];
        if (m.has_state_cost()) q += m.state_cost[s];
        if (m.has_sa_reward()) q += m.sa_reward[s][choice[s]][t];
        cur[s] = q;
      }
      std::swap(cur, next);
    }
    best = minimize ? std::min(best, next[m.initial]) : std::max(best, next[m.initial]);
  }
  return best;
}

/// Dense grid maximum of a two-action stage objective (step 1e-3).
inline double grid_max_two_actions(const DcStageProblem& prob) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) {
    const double theta = static_cast<double>(i) / 1000.0;
    best = std::max(best, stage_objective_value(prob, {theta, 1.0 - theta}));
  }
  return best;
}

} // namespace testsupport
