#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace prospect {

inline constexpr double kDistributionTol = 1e-9;

struct TransitionEntry {
  int state;
  double prob;

  friend bool operator==(const TransitionEntry&, const TransitionEntry&) = default;
};

/// Sparse distribution over successor states, sorted by state index.
using TransitionRow = std::vector<TransitionEntry>;

/// Finite-horizon MDP. States and actions are contiguous indices into the
/// name tables; `enabled[s]` lists the enabled action ids of state s in
/// ascending order and `rows[s][slot]` is the distribution of the slot-th
/// enabled action. Exactly one of `state_cost` (minimized) or `sa_reward`
/// (maximized, time dependent) may be present; `target` marks the
/// reachability set and `crash` the designated bad states counted by the
/// simulator.
struct Mdp {
  std::vector<std::string> state_names;
  std::vector<std::string> action_names; // global catalog, sorted lexicographically
  int initial = 0;
  std::vector<std::vector<int>> enabled;
  std::vector<std::vector<TransitionRow>> rows;
  std::vector<std::uint8_t> target;
  std::vector<std::uint8_t> crash;
  std::vector<double> state_cost;                       // empty unless cost mode
  std::vector<std::vector<std::vector<double>>> sa_reward; // [s][slot][t]; empty unless reward mode
  int horizon = 1;

  int num_states() const { return static_cast<int>(state_names.size()); }
  bool has_state_cost() const { return !state_cost.empty(); }
  bool has_sa_reward() const { return !sa_reward.empty(); }
  bool has_target() const {
    return std::any_of(target.begin(), target.end(), [](std::uint8_t b) { return b != 0; });
  }

  int state_index(const std::string& name) const {
    auto it = std::find(state_names.begin(), state_names.end(), name);
    if (it == state_names.end()) throw std::invalid_argument("unknown state '" + name + "'");
    return static_cast<int>(it - state_names.begin());
  }

  /// Union of the supports of all enabled actions of s, ascending.
  std::vector<int> successors(int s) const {
    std::vector<int> out;
    for (const auto& row : rows[s])
      for (const auto& e : row) out.push_back(e.state);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  friend bool operator==(const Mdp&, const Mdp&) = default;
};

/// Randomized time-indexed policy; sigma[t][s] is aligned with enabled[s].
struct PolicyTable {
  std::vector<std::vector<std::vector<double>>> sigma;

  int horizon() const { return static_cast<int>(sigma.size()); }
};

/// Markov chain induced by fixing a policy at one time step.
struct InducedChain {
  std::vector<std::string> state_names;
  int initial = 0;
  std::vector<TransitionRow> rows;
};

/// v[t][s] for t = 0..T; reachability probabilities or cost/reward values
/// depending on the mode that produced the table.
struct ValueTable {
  std::vector<std::vector<double>> v;

  int horizon() const { return static_cast<int>(v.size()) - 1; }
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Name-keyed incremental construction; build() canonicalizes the index
/// ordering (actions sorted lexicographically, rows sorted by successor).
class MdpBuilder {
public:
  MdpBuilder& add_state(const std::string& name) {
    state_id(name);
    return *this;
  }

  MdpBuilder& add_transition(const std::string& from, const std::string& action,
                             const std::string& to, double prob) {
    transitions_[{state_id(from), action}].emplace_back(state_id(to), prob);
    return *this;
  }

  MdpBuilder& set_initial(const std::string& name) {
    initial_ = state_id(name);
    return *this;
  }

  MdpBuilder& add_target(const std::string& name) {
    targets_.push_back(state_id(name));
    return *this;
  }

  MdpBuilder& add_crash(const std::string& name) {
    crashes_.push_back(state_id(name));
    return *this;
  }

  MdpBuilder& set_state_cost(const std::string& name, double cost) {
    costs_[state_id(name)] = cost;
    return *this;
  }

  /// Constant-in-time reward for (state, action).
  MdpBuilder& set_sa_reward(const std::string& state, const std::string& action, double reward) {
    rewards_const_[{state_id(state), action}] = reward;
    return *this;
  }

  /// Time-dependent reward for (state, action); the vector must have one
  /// entry per decision epoch t = 0..T-1.
  MdpBuilder& set_sa_reward_schedule(const std::string& state, const std::string& action,
                                     std::vector<double> per_time) {
    rewards_sched_[{state_id(state), action}] = std::move(per_time);
    return *this;
  }

  MdpBuilder& set_horizon(int t) {
    horizon_ = t;
    return *this;
  }

  Mdp build() const {
    Mdp m;
    m.state_names = names_;
    m.initial = initial_;
    m.horizon = horizon_;

    std::vector<std::string> actions;
    for (const auto& [key, row] : transitions_) actions.push_back(key.second);
    std::sort(actions.begin(), actions.end());
    actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
    m.action_names = actions;

    const int n = m.num_states();
    m.enabled.resize(n);
    m.rows.resize(n);
    m.target.assign(n, 0);
    m.crash.assign(n, 0);
    for (int s : targets_) m.target[s] = 1;
    for (int s : crashes_) m.crash[s] = 1;

    for (const auto& [key, entries] : transitions_) {
      const auto& [s, action_name] = key;
      const int a = static_cast<int>(
          std::lower_bound(actions.begin(), actions.end(), action_name) - actions.begin());
      TransitionRow row;
      for (const auto& [to, p] : entries) row.push_back({to, p});
      std::sort(row.begin(), row.end(),
                [](const TransitionEntry& x, const TransitionEntry& y) { return x.state < y.state; });
      // merge duplicate successors and drop zero-probability edges; supports
      // define the successor sets, so explicit zeros must not linger
      TransitionRow merged;
      for (const auto& e : row) {
        if (e.prob == 0.0) continue;
        if (!merged.empty() && merged.back().state == e.state)
          merged.back().prob += e.prob;
        else
          merged.push_back(e);
      }
      m.enabled[s].push_back(a);
      m.rows[s].push_back(std::move(merged));
    }
    // transitions_ is ordered by (state, action name), so enabled ids are ascending already;
    // sort defensively to keep the invariant explicit.
    for (int s = 0; s < n; ++s) {
      std::vector<std::size_t> order(m.enabled[s].size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t i, std::size_t j) { return m.enabled[s][i] < m.enabled[s][j]; });
      std::vector<int> en;
      std::vector<TransitionRow> rw;
      for (std::size_t i : order) {
        en.push_back(m.enabled[s][i]);
        rw.push_back(m.rows[s][i]);
      }
      m.enabled[s] = std::move(en);
      m.rows[s] = std::move(rw);
    }

    if (!costs_.empty()) {
      m.state_cost.assign(n, 0.0);
      for (const auto& [s, c] : costs_) m.state_cost[s] = c;
    }
    if (!rewards_const_.empty() || !rewards_sched_.empty()) {
      m.sa_reward.resize(n);
      for (int s = 0; s < n; ++s)
        m.sa_reward[s].assign(m.enabled[s].size(), std::vector<double>(horizon_, 0.0));
      auto slot_of = [&](int s, const std::string& action_name) {
        const int a = static_cast<int>(
            std::lower_bound(actions.begin(), actions.end(), action_name) - actions.begin());
        const auto& en = m.enabled[s];
        auto it = std::find(en.begin(), en.end(), a);
        if (it == en.end())
          throw std::invalid_argument("reward on disabled action '" + action_name + "' at state " +
                                      names_[s]);
        return static_cast<int>(it - en.begin());
      };
      for (const auto& [key, r] : rewards_const_)
        m.sa_reward[key.first][slot_of(key.first, key.second)].assign(horizon_, r);
      for (const auto& [key, sched] : rewards_sched_) {
        if (static_cast<int>(sched.size()) != horizon_)
          throw std::invalid_argument("reward schedule length != horizon at state " +
                                      names_[key.first]);
        m.sa_reward[key.first][slot_of(key.first, key.second)] = sched;
      }
    }
    return m;
  }

private:
  int state_id(const std::string& name) {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it != names_.end()) return static_cast<int>(it - names_.begin());
    names_.push_back(name);
    return static_cast<int>(names_.size()) - 1;
  }

  std::vector<std::string> names_;
  int initial_ = 0;
  int horizon_ = 1;
  std::map<std::pair<int, std::string>, std::vector<std::pair<int, double>>> transitions_;
  std::vector<int> targets_;
  std::vector<int> crashes_;
  std::map<int, double> costs_;
  std::map<std::pair<int, std::string>, double> rewards_const_;
  std::map<std::pair<int, std::string>, std::vector<double>> rewards_sched_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Checks every model invariant and reports violations; an empty result means
/// the model is well formed. This reports rather than throws so that loaders
/// can separate parsing from validation.
inline std::vector<std::string> validate(const Mdp& m) {
  std::vector<std::string> out;
  const int n = m.num_states();
  if (n == 0) {
    out.push_back("model has no states");
    return out;
  }
  if (m.initial < 0 || m.initial >= n) out.push_back("initial state index out of range");
  if (m.horizon < 1) out.push_back("horizon must be a positive integer");
  if (static_cast<int>(m.enabled.size()) != n || static_cast<int>(m.rows.size()) != n ||
      static_cast<int>(m.target.size()) != n || static_cast<int>(m.crash.size()) != n) {
    out.push_back("per-state tables sized inconsistently with the state set");
    return out;
  }

  for (int s = 0; s < n; ++s) {
    if (m.enabled[s].empty()) {
      out.push_back("deadlock: state " + m.state_names[s] + " has no enabled action");
      continue;
    }
    if (m.enabled[s].size() != m.rows[s].size()) {
      out.push_back("state " + m.state_names[s] + ": enabled/rows size mismatch");
      continue;
    }
    for (std::size_t slot = 0; slot < m.rows[s].size(); ++slot) {
      const int a = m.enabled[s][slot];
      const std::string where =
          "(" + m.state_names[s] + ", " +
          (a >= 0 && a < static_cast<int>(m.action_names.size()) ? m.action_names[a] : "?") + ")";
      double sum = 0.0;
      for (const auto& e : m.rows[s][slot]) {
        if (e.state < 0 || e.state >= n) {
          out.push_back(where + ": successor index out of range");
          continue;
        }
        if (!(e.prob >= 0.0 && e.prob <= 1.0))
          out.push_back(where + ": probability " + std::to_string(e.prob) + " outside [0,1]");
        sum += e.prob;
      }
      if (std::abs(sum - 1.0) > kDistributionTol)
        out.push_back(where + ": distribution sums to " + std::to_string(sum));
    }
  }

  if (m.has_state_cost()) {
    if (static_cast<int>(m.state_cost.size()) != n)
      out.push_back("state_cost sized inconsistently with the state set");
    else
      for (int s = 0; s < n; ++s)
        if (!(m.state_cost[s] >= 0.0))
          out.push_back("state " + m.state_names[s] + ": negative cost");
  }
  if (m.has_sa_reward() && static_cast<int>(m.sa_reward.size()) != n)
    out.push_back("sa_reward sized inconsistently with the state set");
  if (m.has_state_cost() && m.has_sa_reward())
    out.push_back("at most one of state_cost / sa_reward may be set");
  return out;
}

/// Reports policy shape and distribution violations against a model.
inline std::vector<std::string> check_policy(const Mdp& m, const PolicyTable& pol) {
  std::vector<std::string> out;
  if (pol.sigma.empty()) {
    out.push_back("policy has no time steps");
    return out;
  }
  for (std::size_t t = 0; t < pol.sigma.size(); ++t) {
    if (static_cast<int>(pol.sigma[t].size()) != m.num_states()) {
      out.push_back("t=" + std::to_string(t) + ": policy row count != state count");
      continue;
    }
    for (int s = 0; s < m.num_states(); ++s) {
      const auto& d = pol.sigma[t][s];
      if (d.size() != m.enabled[s].size()) {
        out.push_back("t=" + std::to_string(t) + ", state " + m.state_names[s] +
                      ": distribution size != enabled action count");
        continue;
      }
      double sum = 0.0;
      for (double p : d) {
        if (!(p >= 0.0 && p <= 1.0 + kDistributionTol))
          out.push_back("t=" + std::to_string(t) + ", state " + m.state_names[s] +
                        ": action probability outside [0,1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kDistributionTol)
        out.push_back("t=" + std::to_string(t) + ", state " + m.state_names[s] +
                      ": action distribution sums to " + std::to_string(sum));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Induced chain
// ---------------------------------------------------------------------------

inline InducedChain induce_chain(const Mdp& m, const PolicyTable& pol, int t) {
  if (t < 0 || t >= pol.horizon())
    throw std::invalid_argument("induce_chain: time index out of range");
  if (auto bad = check_policy(m, pol); !bad.empty())
    throw std::invalid_argument("induce_chain: invalid policy: " + bad.front());

  InducedChain chain;
  chain.state_names = m.state_names;
  chain.initial = m.initial;
  chain.rows.resize(m.num_states());
  for (int s = 0; s < m.num_states(); ++s) {
    std::map<int, double> acc;
    for (std::size_t slot = 0; slot < m.enabled[s].size(); ++slot) {
      const double w = pol.sigma[t][s][slot];
      if (w == 0.0) continue;
      for (const auto& e : m.rows[s][slot]) acc[e.state] += w * e.prob;
    }
    for (const auto& [sp, p] : acc) chain.rows[s].push_back({sp, p});
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Risk-neutral value iteration
// ---------------------------------------------------------------------------

namespace detail {

inline PolicyTable deterministic_policy(const Mdp& m, const std::vector<std::vector<int>>& choice) {
  PolicyTable pol;
  pol.sigma.resize(choice.size());
  for (std::size_t t = 0; t < choice.size(); ++t) {
    pol.sigma[t].resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) {
      pol.sigma[t][s].assign(m.enabled[s].size(), 0.0);
      pol.sigma[t][s][choice[t][s]] = 1.0;
    }
  }
  return pol;
}

} // namespace detail

/// Maximal reachability probabilities by backward induction: target states
/// are absorbing with value 1 at every stage, all other states take the best
/// one-step expectation. Ties break toward the lowest action id.
inline std::pair<ValueTable, PolicyTable> value_iteration_reachability(const Mdp& m) {
  if (auto bad = validate(m); !bad.empty())
    throw std::invalid_argument("value_iteration_reachability: " + bad.front());
  if (!m.has_target())
    throw std::invalid_argument("value_iteration_reachability: empty target set");

  const int n = m.num_states();
  const int T = m.horizon;
  ValueTable values;
  values.v.assign(T + 1, std::vector<double>(n, 0.0));
  for (int s = 0; s < n; ++s) values.v[T][s] = m.target[s] ? 1.0 : 0.0;

  std::vector<std::vector<int>> choice(T, std::vector<int>(n, 0));
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s) {
      if (m.target[s]) {
        values.v[t][s] = 1.0;
        continue;
      }
      double best = -1.0;
      int best_slot = 0;
      for (std::size_t slot = 0; slot < m.rows[s].size(); ++slot) {
        double q = 0.0;
        for (const auto& e : m.rows[s][slot]) q += e.prob * values.v[t + 1][e.state];
        if (q > best) {
          best = q;
          best_slot = static_cast<int>(slot);
        }
      }
      values.v[t][s] = best;
      choice[t][s] = best_slot;
    }
  }
  return {std::move(values), detail::deterministic_policy(m, choice)};
}

/// Finite-horizon risk-neutral backup: minimizes the expected total state
/// cost sum_{t<T} C(s_t), or maximizes the expected total reward
/// sum_{t<T} R_t(s_t, a_t); v_T = 0 in both modes.
inline std::pair<ValueTable, PolicyTable> value_iteration_expected_cost(const Mdp& m) {
  if (auto bad = validate(m); !bad.empty())
    throw std::invalid_argument("value_iteration_expected_cost: " + bad.front());
  if (!m.has_state_cost() && !m.has_sa_reward())
    throw std::invalid_argument("value_iteration_expected_cost: no cost or reward model set");

  const bool minimize = m.has_state_cost();
  const int n = m.num_states();
  const int T = m.horizon;
  ValueTable values;
  values.v.assign(T + 1, std::vector<double>(n, 0.0));

  std::vector<std::vector<int>> choice(T, std::vector<int>(n, 0));
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s) {
      double best = 0.0;
      int best_slot = -1;
      for (std::size_t slot = 0; slot < m.rows[s].size(); ++slot) {
        double q = 0.0;
        for (const auto& e : m.rows[s][slot]) q += e.prob * values.v[t + 1][e.state];
        if (minimize)
          q += m.state_cost[s];
        else
          q += m.sa_reward[s][slot][t];
        if (best_slot < 0 || (minimize ? q < best : q > best)) {
          best = q;
          best_slot = static_cast<int>(slot);
        }
      }
      values.v[t][s] = best;
      choice[t][s] = best_slot;
    }
  }
  return {std::move(values), detail::deterministic_policy(m, choice)};
}

/// Probability of reaching the target set within the horizon under a fixed
/// policy, from the initial state.
inline double reach_probability(const Mdp& m, const PolicyTable& pol) {
  if (auto bad = check_policy(m, pol); !bad.empty())
    throw std::invalid_argument("reach_probability: invalid policy: " + bad.front());
  const int n = m.num_states();
  const int T = pol.horizon();
  std::vector<double> next(n), cur(n);
  for (int s = 0; s < n; ++s) next[s] = m.target[s] ? 1.0 : 0.0;
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s) {
      if (m.target[s]) {
        cur[s] = 1.0;
        continue;
      }
      double q = 0.0;
      for (std::size_t slot = 0; slot < m.rows[s].size(); ++slot) {
        const double w = pol.sigma[t][s][slot];
        if (w == 0.0) continue;
        for (const auto& e : m.rows[s][slot]) q += w * e.prob * next[e.state];
      }
      cur[s] = q;
    }
    std::swap(cur, next);
  }
  return next[m.initial];
}

} // namespace prospect
