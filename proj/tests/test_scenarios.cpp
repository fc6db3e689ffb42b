#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "prospect/scenarios.hpp"
#include "prospect/synthesis.hpp"

using namespace prospect;

TEST_CASE("large gridworld has one state per cell") {
  GridworldSpec spec;
  spec.width = 50;
  spec.height = 50;
  spec.goal = {49, 49};
  spec.horizon = 100;
  for (int i = 0; i < 300; ++i) spec.obstacles.emplace_back(1 + (i * 7) % 48, 1 + (i * 13) % 48);
  // duplicates collapse; top up to exactly 300 distinct cells
  std::set<std::pair<int, int>> cells(spec.obstacles.begin(), spec.obstacles.end());
  for (int x = 1; x < 49 && cells.size() < 300; ++x)
    for (int y = 1; y < 49 && cells.size() < 300; ++y) cells.insert({x, y});
  spec.obstacles.assign(cells.begin(), cells.end());
  const Mdp m = build_gridworld(spec);
  CHECK(m.num_states() == 2500);
  CHECK(validate(m).empty());
}

TEST_CASE("degenerate 1x2 gridworld with certain moves is a deterministic chain") {
  GridworldSpec spec;
  spec.width = 2;
  spec.height = 1;
  spec.initial = {0, 0};
  spec.goal = {1, 0};
  spec.delta = 1.0;
  spec.horizon = 2;
  const Mdp m = build_gridworld(spec);
  CHECK(validate(m).empty());
  const int s0 = m.state_index("0_0");
  for (std::size_t slot = 0; slot < m.enabled[s0].size(); ++slot) {
    REQUIRE(m.rows[s0][slot].size() == 1);
    CHECK(m.rows[s0][slot][0].prob == 1.0);
  }
}

TEST_CASE("slip splits uniformly over the other in-bounds neighbors") {
  GridworldSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.initial = {0, 0};
  spec.goal = {2, 2};
  spec.delta = 0.2;
  const Mdp m = build_gridworld(spec);
  const int center = m.state_index("1_1");
  // action east from the center: east w.p. 0.2, the three other neighbors
  // w.p. (1 - 0.2)/3 each
  const int east_slot = 0; // actions sorted: east, north, south, west
  const auto& row = m.rows[center][east_slot];
  REQUIRE(row.size() == 4);
  for (const auto& e : row) {
    if (e.state == m.state_index("2_1"))
      CHECK_THAT(e.prob, Catch::Matchers::WithinAbs(0.2, 1e-12));
    else
      CHECK_THAT(e.prob, Catch::Matchers::WithinAbs(0.8 / 3.0, 1e-12));
  }
}

TEST_CASE("gridworld rows are distributions everywhere, including edges") {
  GridworldSpec spec;
  spec.width = 4;
  spec.height = 3;
  spec.initial = {0, 0};
  spec.goal = {3, 2};
  spec.obstacles = {{1, 1}};
  spec.delta = 0.2;
  const Mdp m = build_gridworld(spec);
  REQUIRE(validate(m).empty());
  for (int s = 0; s < m.num_states(); ++s)
    for (const auto& row : m.rows[s]) {
      double sum = 0.0;
      for (const auto& e : row) sum += e.prob;
      REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("gridworld flags obstacles and goal correctly") {
  GridworldSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.initial = {0, 0};
  spec.goal = {2, 2};
  spec.obstacles = {{1, 1}};
  const Mdp m = build_gridworld(spec);
  CHECK(m.crash[m.state_index("1_1")] == 1);
  CHECK(m.target[m.state_index("2_2")] == 1);
  CHECK(m.state_cost[m.state_index("1_1")] == 50.0);
  CHECK(m.state_cost[m.state_index("0_0")] == 1.0);
  CHECK(m.state_cost[m.state_index("2_2")] == 0.0);
  // the goal is absorbing
  const int goal = m.state_index("2_2");
  for (const auto& row : m.rows[goal]) {
    REQUIRE(row.size() == 1);
    CHECK(row[0].state == goal);
  }
}

TEST_CASE("gridworld spec validation") {
  GridworldSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.initial = {0, 0};
  spec.goal = {0, 0};
  spec.obstacles = {{0, 0}};
  CHECK_THROWS_AS(build_gridworld(spec), std::invalid_argument);
  GridworldSpec bad_delta;
  bad_delta.delta = 1.5;
  CHECK_THROWS_AS(build_gridworld(bad_delta), std::invalid_argument);
  GridworldSpec oob;
  oob.width = 3;
  oob.height = 3;
  oob.goal = {5, 5};
  CHECK_THROWS_AS(build_gridworld(oob), std::invalid_argument);
}

TEST_CASE("ride-share model matches the published wait dynamics") {
  const Mdp m = build_rideshare(RideshareSpec{});
  REQUIRE(validate(m).empty());
  CHECK(m.num_states() == 5);
  const int s0 = m.state_index("0");
  const int wait_slot = 1; // actions sorted: ride, wait
  const auto& row = m.rows[s0][wait_slot];
  CHECK_THAT(row[0].prob, Catch::Matchers::WithinAbs(0.876, 1e-12));
  // the ride action jumps to the absorbing state with certainty
  for (int s = 0; s < 4; ++s) {
    const auto& ride_row = m.rows[s][0];
    REQUIRE(ride_row.size() == 1);
    CHECK(ride_row[0].state == m.state_index("4"));
    CHECK(ride_row[0].prob == 1.0);
  }
  // published rows sum to one
  for (int s = 0; s < 4; ++s) {
    double sum = 0.0;
    for (const auto& e : m.rows[s][wait_slot]) sum += e.prob;
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-3));
  }
}

TEST_CASE("ride-share rewards decay with time and grow with the multiplier discount") {
  RideshareSpec spec;
  const Mdp m = build_rideshare(spec);
  const double unit = spec.price_base + spec.price_per_mile * spec.distance_miles +
                      spec.price_per_minute * spec.ride_minutes;
  for (int s = 0; s < 4; ++s)
    for (int t = 0; t < spec.horizon; ++t) {
      const double expected =
          spec.surplus_initial - spec.surplus_decay * t - spec.multipliers[s] * unit;
      REQUIRE_THAT(m.sa_reward[s][0][t], Catch::Matchers::WithinAbs(expected, 1e-12));
    }
}

TEST_CASE("synthesized ride probabilities follow the monotone trends") {
  RideshareSpec spec;
  const Mdp m = build_rideshare(spec);
  SynthesisConfig cfg;
  cfg.mode = SynthesisMode::RewardIdentityUtility;
  Posynomial p;
  p.terms = {{0.00231642258521069, 0.05}, {0.00128356642708694, 0.1},
             {0.195783466331253, 0.35},   {0.598977890286512, 0.4},
             {0.159689481206954, 0.95},   {0.0331820175871778, 3.0},
             {0.00847475103416698, 23.0}};
  cfg.weighting = p;
  const auto result = synthesize(m, cfg);
  const auto table = ride_probability_table(m, result.policy);
  // nonincreasing across multipliers at every time
  for (int t = 0; t < spec.horizon; ++t)
    for (int s = 1; s < 4; ++s) REQUIRE(table[t][s] <= table[t][s - 1] + 1e-9);
  // nondecreasing across time at every multiplier
  for (int s = 0; s < 4; ++s)
    for (int t = 1; t < spec.horizon; ++t) REQUIRE(table[t][s] >= table[t - 1][s] - 1e-9);
  // the model is eager to ride at the base multiplier
  CHECK(table[0][0] > 0.5);
}
