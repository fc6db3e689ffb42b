#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace prospect {

/// Exact Euclidean projection onto the probability simplex
/// (sort-based pivot algorithm).
inline std::vector<double> project_to_simplex(std::vector<double> y) {
  const std::size_t n = y.size();
  if (n == 0) throw std::invalid_argument("project_to_simplex: empty vector");
  std::vector<double> u = y;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0;
  std::size_t rho = 1;
  double prefix_at_rho = u[0];
  for (std::size_t j = 0; j < n; ++j) {
    running += u[j];
    if (u[j] - (running - 1.0) / static_cast<double>(j + 1) > 0.0) {
      rho = j + 1;
      prefix_at_rho = running;
    }
  }
  const double tau = (prefix_at_rho - 1.0) / static_cast<double>(rho);
  for (auto& v : y) v = std::max(v - tau, 0.0);
  return y;
}

struct SimplexAscentResult {
  std::vector<double> point;
  double value = 0.0;
  int iterations = 0;
};

/// Projected gradient ascent over the probability simplex with Armijo
/// backtracking on the projection arc. `f(x, grad)` must return the objective
/// value and fill `grad` when the pointer is non-null; concavity of f makes
/// the returned point globally optimal up to the tolerance. Terminates when
/// ||project(x + g) - x|| <= tol or after max_iter iterations.
template <class F>
SimplexAscentResult maximize_over_simplex(F&& f, std::vector<double> start, double tol = 1e-8,
                                          int max_iter = 500) {
  std::vector<double> x = project_to_simplex(std::move(start));
  std::vector<double> grad(x.size(), 0.0);
  double fx = f(x, &grad);
  double step = 1.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    for (double g : grad) {
      if (!std::isfinite(g))
        throw std::runtime_error("maximize_over_simplex: non-finite gradient");
    }
    // stationarity measure on the unit-step projection arc
    std::vector<double> probe(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + grad[i];
    probe = project_to_simplex(std::move(probe));
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = probe[i] - x[i];
      norm += d * d;
    }
    if (std::sqrt(norm) <= tol) break;

    // Armijo backtracking; the trial step grows geometrically from the last
    // accepted one so linear objectives snap to a vertex quickly.
    double alpha = std::min(step * 4.0, 1e12);
    bool accepted = false;
    while (alpha >= 1e-14) {
      std::vector<double> trial(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * grad[i];
      trial = project_to_simplex(std::move(trial));
      double slope = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) slope += grad[i] * (trial[i] - x[i]);
      const double ft = f(trial, nullptr);
      if (ft >= fx + 1e-4 * slope && ft >= fx) {
        x = std::move(trial);
        fx = ft;
        step = alpha;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break; // no ascent direction survives backtracking
    fx = f(x, &grad);
  }
  return {std::move(x), fx, it};
}

} // namespace prospect
