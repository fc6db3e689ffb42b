#include <catch2/catch_amalgamated.hpp>

#include "prospect/mdp.hpp"
#include "prospect/simulate.hpp"
#include "support.hpp"

using namespace prospect;
using namespace testsupport;

TEST_CASE("deterministic chain has zero cost variance") {
  MdpBuilder b;
  b.add_state("s0").add_state("s1").add_state("s2");
  b.set_initial("s0");
  b.add_transition("s0", "go", "s1", 1.0);
  b.add_transition("s1", "go", "s2", 1.0);
  b.add_transition("s2", "go", "s2", 1.0);
  b.set_state_cost("s0", 1.0);
  b.set_state_cost("s1", 2.0);
  b.set_state_cost("s2", 0.0);
  b.add_target("s2");
  b.set_horizon(3);
  const Mdp m = b.build();

  PolicyTable pol;
  pol.sigma.assign(3, std::vector<std::vector<double>>(3, {1.0}));
  const SimulationReport report = simulate(m, pol, 50, 123);
  REQUIRE(report.runs == 50);
  for (double total : report.totals) CHECK(total == 3.0); // 1 + 2 + 0
  CHECK(report.success_count == 50);
  CHECK(report.crash_count == 0);
  CHECK_THAT(report.mean_total_on_success, Catch::Matchers::WithinAbs(3.0, 1e-12));
}

TEST_CASE("empirical reach frequency matches the mixture tail") {
  const Mdp m = branching_mdp();
  const PolicyTable pol = branching_policy(m, 0.3, 0.7);
  const SimulationReport report = simulate(m, pol, 100000, 42);
  // reaching state 4 happens w.p. 0.4 * 0.7 = 0.28
  const double freq = static_cast<double>(report.success_count) / report.runs;
  CHECK_THAT(freq, Catch::Matchers::WithinAbs(0.28, 0.01));
}

TEST_CASE("identical seeds give bit-identical reports") {
  const Mdp m = branching_mdp();
  const PolicyTable pol = branching_policy(m, 0.3, 0.7);
  const SimulationReport a = simulate(m, pol, 1000, 7);
  const SimulationReport b = simulate(m, pol, 1000, 7);
  CHECK(a.totals == b.totals);
  CHECK(a.crashed == b.crashed);
  CHECK(a.reached == b.reached);
  CHECK(a.crash_count == b.crash_count);
  CHECK(a.success_count == b.success_count);
}

TEST_CASE("different seeds decorrelate runs") {
  const Mdp m = branching_mdp();
  const PolicyTable pol = branching_policy(m, 0.3, 0.7);
  const SimulationReport a = simulate(m, pol, 1000, 7);
  const SimulationReport b = simulate(m, pol, 1000, 8);
  CHECK(a.reached != b.reached);
}

TEST_CASE("crash bookkeeping counts runs on first entry") {
  MdpBuilder b;
  b.add_state("s").add_state("bad").add_state("g");
  b.set_initial("s");
  b.add_transition("s", "go", "bad", 0.5);
  b.add_transition("s", "go", "g", 0.5);
  b.add_transition("bad", "go", "bad", 1.0);
  b.add_transition("g", "go", "g", 1.0);
  b.add_target("g");
  b.add_crash("bad");
  b.set_state_cost("s", 1.0);
  b.set_state_cost("bad", 10.0);
  b.set_state_cost("g", 0.0);
  b.set_horizon(4);
  const Mdp m = b.build();
  PolicyTable pol;
  pol.sigma.assign(4, std::vector<std::vector<double>>(3, {1.0}));
  const SimulationReport report = simulate(m, pol, 2000, 11);
  CHECK(report.crash_count + (report.runs - report.crash_count) == report.runs);
  CHECK(report.crash_count > 800);
  CHECK(report.crash_count < 1200);
  // crash runs never reach g here, so successes are exactly the clean runs
  CHECK(report.success_count == report.runs - report.crash_count);
  CHECK_THAT(report.mean_total_on_success, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("simulate converges to the induced-chain reach probability") {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 5; ++trial) {
    const Mdp m = random_mdp(rng, 5, 3, 6);
    const PolicyTable pol = random_policy(rng, m, m.horizon);
    const double p = reach_probability(m, pol);
    const int runs = 20000;
    const SimulationReport report = simulate(m, pol, runs, 1000 + trial);
    const double freq = static_cast<double>(report.success_count) / runs;
    const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-6) / runs);
    REQUIRE_THAT(freq, Catch::Matchers::WithinAbs(p, 3.0 * sigma + 1e-9));
  }
}

TEST_CASE("simulate rejects bad inputs") {
  const Mdp m = branching_mdp();
  const PolicyTable pol = branching_policy(m, 0.3, 0.7);
  CHECK_THROWS_AS(simulate(m, pol, 0, 1), std::invalid_argument);
  PolicyTable broken = pol;
  broken.sigma[0][0][0] = 0.9; // sums to 1.6
  CHECK_THROWS_AS(simulate(m, broken, 10, 1), std::invalid_argument);
}
