#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "prospect/mdp.hpp"
#include "prospect/rng.hpp"

namespace prospect {

/// Seeded rollout summary. `totals` holds the accumulated state cost
/// (sum_{t<T} C(s_t)) or accumulated reward per run; runs that entered a
/// crash state are flagged and excluded from the success-cost mean.
struct SimulationReport {
  std::uint64_t seed = 0;
  int runs = 0;
  std::vector<double> totals;
  std::vector<std::uint8_t> crashed;
  std::vector<std::uint8_t> reached;
  int crash_count = 0;
  int success_count = 0; // target reached within the horizon
  double mean_total_on_success = std::numeric_limits<double>::quiet_NaN();
};

/// Samples `runs` trajectories under the policy. Run i draws from
/// SplitMix64::substream(seed, i): one uniform per action choice and one per
/// successor transition, consumed by cumulative-sum inversion in index order.
/// Identical inputs therefore produce bit-identical reports.
inline SimulationReport simulate(const Mdp& m, const PolicyTable& pol, int runs,
                                 std::uint64_t seed) {
  if (runs < 1) throw std::invalid_argument("simulate: runs must be >= 1");
  if (auto bad = validate(m); !bad.empty())
    throw std::invalid_argument("simulate: invalid model: " + bad.front());
  if (auto bad = check_policy(m, pol); !bad.empty())
    throw std::invalid_argument("simulate: invalid policy: " + bad.front());
  const int T = pol.horizon();

  auto pick = [](const std::vector<double>& weights, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  };

  SimulationReport report;
  report.seed = seed;
  report.runs = runs;
  report.totals.reserve(runs);
  report.crashed.reserve(runs);
  report.reached.reserve(runs);

  double success_sum = 0.0;
  int success_clean = 0;
  for (int r = 0; r < runs; ++r) {
    SplitMix64 rng = SplitMix64::substream(seed, static_cast<std::uint64_t>(r));
    int s = m.initial;
    bool crashed = m.crash[s] != 0;
    bool reached = m.target[s] != 0;
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
      if (m.has_state_cost()) total += m.state_cost[s];
      const int slot = pick(pol.sigma[t][s], rng.next_double());
      if (m.has_sa_reward()) total += m.sa_reward[s][slot][t];
      const auto& row = m.rows[s][slot];
      const double u = rng.next_double();
      double acc = 0.0;
      int next = row.back().state;
      for (const auto& e : row) {
        acc += e.prob;
        if (u < acc) {
          next = e.state;
          break;
        }
      }
      s = next;
      crashed = crashed || m.crash[s] != 0;
      reached = reached || m.target[s] != 0;
    }
    report.totals.push_back(total);
    report.crashed.push_back(crashed ? 1 : 0);
    report.reached.push_back(reached ? 1 : 0);
    if (crashed) ++report.crash_count;
    if (reached) ++report.success_count;
    if (reached && !crashed) {
      success_sum += total;
      ++success_clean;
    }
  }
  if (success_clean > 0) report.mean_total_on_success = success_sum / success_clean;
  return report;
}

} // namespace prospect
