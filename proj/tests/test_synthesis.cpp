#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prospect/synthesis.hpp"
#include "support.hpp"

using namespace prospect;
using namespace testsupport;

namespace {

Posynomial reference_posynomial() {
  Posynomial p;
  p.terms = {{0.00231642258521069, 0.05}, {0.00128356642708694, 0.1},
             {0.195783466331253, 0.35},   {0.598977890286512, 0.4},
             {0.159689481206954, 0.95},   {0.0331820175871778, 3.0},
             {0.00847475103416698, 23.0}};
  return p;
}

} // namespace

TEST_CASE("identity synthesis solves the branching example exactly") {
  const Mdp m = branching_mdp_extended();
  SynthesisConfig cfg;
  const auto result = synthesize(m, cfg);
  const int s1 = m.state_index("1");
  CHECK_THAT(result.values.v[0][s1], Catch::Matchers::WithinAbs(0.5, 1e-9));
  CHECK_THAT(result.policy.sigma[0][s1][0], Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK_THAT(result.values.v[1][m.state_index("2")], Catch::Matchers::WithinAbs(0.2, 1e-9));
  CHECK_THAT(result.values.v[1][m.state_index("3")], Catch::Matchers::WithinAbs(0.5, 1e-9));
  CHECK_THAT(result.values.v[1][m.state_index("4")], Catch::Matchers::WithinAbs(0.9, 1e-9));
}

TEST_CASE("fixed-policy evaluation scores the branching mixture") {
  const Mdp m = branching_mdp_extended();
  PolicyTable pol = branching_policy(m, 0.3, 0.7);
  SynthesisConfig cfg;
  const ValueTable values = evaluate_policy_cpt(m, pol, cfg);
  CHECK_THAT(values.v[0][m.state_index("1")], Catch::Matchers::WithinAbs(0.486, 1e-9));
}

TEST_CASE("the synthesized policy evaluates to its own value table") {
  const Mdp m = branching_mdp_extended();
  SynthesisConfig cfg;
  cfg.weighting = reference_posynomial();
  cfg.utility = UtilitySpec::power_gain(0.88);
  const auto result = synthesize(m, cfg);
  const ValueTable evaluated = evaluate_policy_cpt(m, result.policy, cfg);
  for (std::size_t t = 0; t < result.values.v.size(); ++t)
    for (int s = 0; s < m.num_states(); ++s)
      REQUIRE_THAT(evaluated.v[t][s],
                   Catch::Matchers::WithinAbs(result.values.v[t][s], 1e-9));
}

TEST_CASE("no fixed policy beats the synthesized value") {
  const Mdp m = branching_mdp_extended();
  SynthesisConfig cfg;
  cfg.weighting = reference_posynomial();
  cfg.utility = UtilitySpec::power_gain(0.88);
  const auto result = synthesize(m, cfg);
  SplitMix64 rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const PolicyTable pol = random_policy(rng, m, m.horizon);
    const ValueTable values = evaluate_policy_cpt(m, pol, cfg);
    REQUIRE(values.v[0][m.initial] <= result.values.v[0][m.initial] + 1e-9);
  }
}

TEST_CASE("reference weighting with power utility inflates the branching value") {
  const Mdp m = branching_mdp_extended();
  SynthesisConfig cfg;
  cfg.weighting = reference_posynomial();
  cfg.utility = UtilitySpec::power_gain(0.88);
  const auto result = synthesize(m, cfg);
  const int s1 = m.state_index("1");
  CHECK(result.values.v[0][s1] >= 0.5);

  // cross-check the single decision state against a dense simplex grid
  std::vector<double> next(m.num_states(), 0.0);
  next[m.state_index("2")] = result.values.v[1][m.state_index("2")];
  next[m.state_index("3")] = result.values.v[1][m.state_index("3")];
  next[m.state_index("4")] = result.values.v[1][m.state_index("4")];
  const DcStageProblem prob =
      build_stage_objective(s1, next, m, cfg.weighting, cfg.utility);
  const double oracle = grid_max_two_actions(prob);
  CHECK(result.values.v[0][s1] >= oracle - 1e-3);
}

TEST_CASE("identity synthesis reproduces value iteration on random models") {
  SplitMix64 rng(1001);
  for (int trial = 0; trial < 20; ++trial) {
    const Mdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 18), 3,
                             1 + static_cast<int>(rng.next_u64() % 10));
    const auto [vi_values, vi_policy] = value_iteration_reachability(m);
    SynthesisConfig cfg;
    const auto result = synthesize(m, cfg);
    for (std::size_t t = 0; t < vi_values.v.size(); ++t)
      for (int s = 0; s < m.num_states(); ++s)
        REQUIRE_THAT(result.values.v[t][s],
                     Catch::Matchers::WithinAbs(vi_values.v[t][s], 1e-5));
  }
}

TEST_CASE("reachability values stay within the weighted utility bound") {
  SplitMix64 rng(1002);
  const Posynomial p = reference_posynomial();
  for (int trial = 0; trial < 10; ++trial) {
    const Mdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 8), 3, 4);
    SynthesisConfig cfg;
    cfg.weighting = p;
    cfg.utility = UtilitySpec::power_gain(0.88);
    const auto result = synthesize(m, cfg);
    const double bound = std::max(1.0, p.coeff_sum() * eval_utility(cfg.utility, 1.0));
    for (std::size_t t = 0; t < result.values.v.size(); ++t)
      for (int s = 0; s < m.num_states(); ++s) {
        REQUIRE(result.values.v[t][s] >= -1e-12);
        if (m.target[s]) {
          REQUIRE(result.values.v[t][s] == eval_utility(cfg.utility, 1.0));
        } else {
          REQUIRE(result.values.v[t][s] <= bound + 1e-9);
        }
      }
  }
}

TEST_CASE("state-cost stage problems with zero cost match the reachability build") {
  SplitMix64 rng(1003);
  for (int trial = 0; trial < 50; ++trial) {
    Mdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 5), 3, 3);
    m.state_cost.assign(m.num_states(), 0.0);
    std::vector<double> next(m.num_states());
    for (auto& v : next) v = rng.next_double();
    const int s = static_cast<int>(rng.next_u64() % m.num_states());
    const DcStageProblem reach = build_stage_objective(
        s, next, m, Posynomial::identity(), UtilitySpec::identity());
    const DcStageProblem cost = build_stage_objective(
        s, next, m, Posynomial::identity(), UtilitySpec::identity(), m.state_cost[s]);
    REQUIRE(reach.increments == cost.increments);
    REQUIRE(reach.tail_coeffs == cost.tail_coeffs);
    REQUIRE(reach.affine_constant == cost.affine_constant);
  }
}

TEST_CASE("state-cost synthesis with identity pieces equals risk-neutral value iteration") {
  SplitMix64 rng(1004);
  for (int trial = 0; trial < 15; ++trial) {
    Mdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 8), 3,
                       1 + static_cast<int>(rng.next_u64() % 6));
    m.state_cost.assign(m.num_states(), 0.0);
    for (auto& c : m.state_cost) c = rng.next_double() * 5.0;
    const auto [vi_values, vi_policy] = value_iteration_expected_cost(m);
    SynthesisConfig cfg;
    cfg.mode = SynthesisMode::StateCost;
    const auto result = synthesize(m, cfg);
    for (std::size_t t = 0; t < vi_values.v.size(); ++t)
      for (int s = 0; s < m.num_states(); ++s)
        REQUIRE_THAT(result.values.v[t][s],
                     Catch::Matchers::WithinAbs(vi_values.v[t][s], 1e-5));
  }
}

TEST_CASE("reward synthesis with identity pieces equals risk-neutral value iteration") {
  SplitMix64 rng(1005);
  for (int trial = 0; trial < 15; ++trial) {
    Mdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 6), 3,
                       1 + static_cast<int>(rng.next_u64() % 5));
    m.sa_reward.resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) {
      m.sa_reward[s].resize(m.enabled[s].size());
      for (auto& sched : m.sa_reward[s]) {
        sched.resize(m.horizon);
        for (auto& r : sched) r = rng.next_double() * 6.0 - 3.0;
      }
    }
    const auto [vi_values, vi_policy] = value_iteration_expected_cost(m);
    SynthesisConfig cfg;
    cfg.mode = SynthesisMode::RewardIdentityUtility;
    const auto result = synthesize(m, cfg);
    for (std::size_t t = 0; t < vi_values.v.size(); ++t)
      for (int s = 0; s < m.num_states(); ++s)
        REQUIRE_THAT(result.values.v[t][s],
                     Catch::Matchers::WithinAbs(vi_values.v[t][s], 1e-5));
  }
}

TEST_CASE("state-cost synthesis is never beaten by fixed policies") {
  SplitMix64 rng(1006);
  Mdp m = random_mdp(rng, 6, 3, 4);
  m.state_cost.assign(m.num_states(), 0.0);
  for (auto& c : m.state_cost) c = rng.next_double() * 5.0;
  SynthesisConfig cfg;
  cfg.mode = SynthesisMode::StateCost;
  cfg.weighting = reference_posynomial();
  cfg.utility = UtilitySpec::power_gain(0.88);
  const auto result = synthesize(m, cfg);
  for (int trial = 0; trial < 100; ++trial) {
    const PolicyTable pol = random_policy(rng, m, m.horizon);
    const ValueTable values = evaluate_policy_cpt(m, pol, cfg);
    REQUIRE(values.v[0][m.initial] >= result.values.v[0][m.initial] - 1e-9);
  }
}

TEST_CASE("mode and model requirements are enforced") {
  const Mdp m = branching_mdp();
  SynthesisConfig cfg;
  cfg.mode = SynthesisMode::StateCost;
  CHECK_THROWS_AS(synthesize(m, cfg), std::invalid_argument);
  cfg.mode = SynthesisMode::RewardIdentityUtility;
  CHECK_THROWS_AS(synthesize(m, cfg), std::invalid_argument);

  Mdp no_target = m;
  no_target.target.assign(no_target.num_states(), 0);
  SynthesisConfig reach;
  CHECK_THROWS_AS(synthesize(no_target, reach), std::invalid_argument);

  Mdp reward = m;
  reward.sa_reward.resize(reward.num_states());
  for (int s = 0; s < reward.num_states(); ++s)
    reward.sa_reward[s].assign(reward.enabled[s].size(),
                               std::vector<double>(reward.horizon, 0.0));
  SynthesisConfig bad_utility;
  bad_utility.mode = SynthesisMode::RewardIdentityUtility;
  bad_utility.utility = UtilitySpec::power_gain(0.88);
  CHECK_THROWS_AS(synthesize(reward, bad_utility), std::invalid_argument);
}
