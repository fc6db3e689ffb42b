#pragma once

#include <array>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prospect/mdp.hpp"

namespace prospect {

// ---------------------------------------------------------------------------
// Gridworld
// ---------------------------------------------------------------------------

/// Slippery gridworld: four move actions; the intended cell is reached with
/// probability delta and the remaining mass splits uniformly over the other
/// in-bounds neighbor cells. Walls reflect (the intended move stays put).
/// Obstacles are passable, cost `obstacle_cost` per step spent on them and
/// are flagged as crash states; the goal is the reachability target, is
/// absorbing and costs nothing.
struct GridworldSpec {
  int width = 10;
  int height = 10;
  std::vector<std::pair<int, int>> obstacles;
  std::pair<int, int> initial{0, 0};
  std::pair<int, int> goal{9, 9};
  double delta = 0.2; // probability of arriving at the intended cell
  double move_cost = 1.0;
  double obstacle_cost = 50.0;
  int horizon = 30;
};

inline Mdp build_gridworld(const GridworldSpec& spec) {
  if (spec.width < 1 || spec.height < 1)
    throw std::invalid_argument("gridworld: dimensions must be positive");
  if (!(spec.delta >= 0.0 && spec.delta <= 1.0))
    throw std::invalid_argument("gridworld: delta must lie in [0,1]");
  if (!(spec.move_cost > 0.0) || !(spec.obstacle_cost > 0.0))
    throw std::invalid_argument("gridworld: costs must be positive");
  if (spec.horizon < 1) throw std::invalid_argument("gridworld: horizon must be positive");

  auto in_bounds = [&](int x, int y) {
    return x >= 0 && x < spec.width && y >= 0 && y < spec.height;
  };
  auto check_cell = [&](std::pair<int, int> c, const char* what) {
    if (!in_bounds(c.first, c.second))
      throw std::invalid_argument(std::string("gridworld: ") + what + " cell out of bounds");
  };
  check_cell(spec.initial, "initial");
  check_cell(spec.goal, "goal");
  std::set<std::pair<int, int>> obstacle_set;
  for (const auto& c : spec.obstacles) {
    check_cell(c, "obstacle");
    obstacle_set.insert(c);
  }
  if (obstacle_set.count(spec.initial) || obstacle_set.count(spec.goal))
    throw std::invalid_argument("gridworld: initial and goal must not be obstacles");

  auto name_of = [](int x, int y) { return std::to_string(x) + "_" + std::to_string(y); };
  const std::array<std::pair<std::string, std::pair<int, int>>, 4> moves{{
      {"east", {1, 0}},
      {"north", {0, 1}},
      {"south", {0, -1}},
      {"west", {-1, 0}},
  }};

  MdpBuilder builder;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) builder.add_state(name_of(x, y));
  builder.set_initial(name_of(spec.initial.first, spec.initial.second));
  builder.add_target(name_of(spec.goal.first, spec.goal.second));
  builder.set_horizon(spec.horizon);

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const std::string from = name_of(x, y);
      const bool is_goal = std::pair{x, y} == spec.goal;
      const bool is_obstacle = obstacle_set.count({x, y}) > 0;
      builder.set_state_cost(from, is_goal ? 0.0 : (is_obstacle ? spec.obstacle_cost
                                                                : spec.move_cost));
      if (is_obstacle) builder.add_crash(from);
      if (is_goal) {
        for (const auto& [action, d] : moves) builder.add_transition(from, action, from, 1.0);
        continue;
      }
      for (const auto& [action, d] : moves) {
        int ix = x + d.first, iy = y + d.second;
        if (!in_bounds(ix, iy)) {
          ix = x;
          iy = y;
        }
        std::vector<std::pair<int, int>> slip_cells;
        for (const auto& [other_action, od] : moves) {
          const int nx = x + od.first, ny = y + od.second;
          if (!in_bounds(nx, ny)) continue;
          if (nx == ix && ny == iy) continue;
          slip_cells.emplace_back(nx, ny);
        }
        if (slip_cells.empty()) {
          builder.add_transition(from, action, name_of(ix, iy), 1.0);
        } else {
          builder.add_transition(from, action, name_of(ix, iy), spec.delta);
          const double each = (1.0 - spec.delta) / static_cast<double>(slip_cells.size());
          for (const auto& [nx, ny] : slip_cells)
            builder.add_transition(from, action, name_of(nx, ny), each);
        }
      }
    }
  }
  return builder.build();
}

// ---------------------------------------------------------------------------
// Ride sharing
// ---------------------------------------------------------------------------

/// Five-state ride-taking model: states 0..3 hold increasing price
/// multipliers with a stochastic wait dynamic; the ride action jumps to the
/// absorbing state 4. Waiting earns `base_reward`; riding at time t earns
/// S_t - multiplier * (base + per-mile and per-minute prices), where S_t
/// decays linearly. The price constants default to typical Washington-DC
/// fares; `surplus_initial`/`surplus_decay` are calibrated so the default
/// model rides eagerly at multiplier 1 and the ride probability grows with
/// time at every multiplier.
struct RideshareSpec {
  std::array<double, 4> multipliers{1.0, 1.4, 1.8, 2.2};
  std::array<std::array<double, 4>, 4> wait_matrix{{
      {0.876, 0.099, 0.017, 0.008},
      {0.347, 0.412, 0.167, 0.074},
      {0.106, 0.353, 0.259, 0.282},
      {0.086, 0.219, 0.143, 0.552},
  }};
  double base_reward = 0.0;     // reward for waiting one step
  double surplus_initial = 26.0;
  double surplus_decay = 1.0;   // per time step
  double distance_miles = 5.0;
  double ride_minutes = 15.0;
  double price_base = 1.15;
  double price_per_mile = 1.02;
  double price_per_minute = 0.22;
  int horizon = 5;
};

inline Mdp build_rideshare(const RideshareSpec& spec) {
  if (spec.horizon < 1) throw std::invalid_argument("rideshare: horizon must be positive");
  for (const auto& row : spec.wait_matrix) {
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("rideshare: wait matrix entries must lie in [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-3)
      throw std::invalid_argument("rideshare: wait matrix row sums to " + std::to_string(sum));
  }

  const double ride_price_unit =
      spec.price_base + spec.price_per_mile * spec.distance_miles +
      spec.price_per_minute * spec.ride_minutes;

  MdpBuilder builder;
  for (int s = 0; s < 5; ++s) builder.add_state(std::to_string(s));
  builder.set_initial("0");
  builder.set_horizon(spec.horizon);

  for (int s = 0; s < 4; ++s) {
    const std::string from = std::to_string(s);
    for (int sp = 0; sp < 4; ++sp) {
      const double p = spec.wait_matrix[s][sp];
      if (p > 0.0) builder.add_transition(from, "wait", std::to_string(sp), p);
    }
    builder.add_transition(from, "ride", "4", 1.0);
    builder.set_sa_reward(from, "wait", spec.base_reward);
    std::vector<double> ride_reward(spec.horizon);
    for (int t = 0; t < spec.horizon; ++t)
      ride_reward[t] = (spec.surplus_initial - spec.surplus_decay * t) -
                       spec.multipliers[s] * ride_price_unit;
    builder.set_sa_reward_schedule(from, "ride", std::move(ride_reward));
  }
  builder.add_transition("4", "wait", "4", 1.0);
  builder.set_sa_reward("4", "wait", 0.0);
  return builder.build();
}

/// table[t][s] = probability that the policy takes the ride action in
/// multiplier state s at time t.
inline std::vector<std::array<double, 4>> ride_probability_table(const Mdp& m,
                                                                 const PolicyTable& pol) {
  std::vector<std::array<double, 4>> table(pol.horizon());
  const int ride_action = static_cast<int>(
      std::find(m.action_names.begin(), m.action_names.end(), "ride") - m.action_names.begin());
  for (int t = 0; t < pol.horizon(); ++t) {
    for (int s = 0; s < 4; ++s) {
      const auto& enabled = m.enabled[s];
      double p = 0.0;
      for (std::size_t slot = 0; slot < enabled.size(); ++slot)
        if (enabled[slot] == ride_action) p = pol.sigma[t][s][slot];
      table[t][s] = p;
    }
  }
  return table;
}

} // namespace prospect
