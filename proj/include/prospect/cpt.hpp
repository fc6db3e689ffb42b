#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prospect/posynomial.hpp"

namespace prospect {

// ---------------------------------------------------------------------------
// Probability weighting
// ---------------------------------------------------------------------------

enum class WeightingKind { Identity, Prelec, TverskyKahneman, PosynomialApprox };

/// A probability-weighting function w: [0,1] -> [0,1] with w(0)=0, w(1)=1.
/// Prelec: w(k) = exp(-beta * (-ln k)^eta), 0 < eta < 1, beta > 0.
/// Tversky-Kahneman: w(k) = k^eta / (k^eta + (1-k)^eta)^(1/eta), 0 < eta <= 1.
struct WeightingSpec {
  WeightingKind kind = WeightingKind::Identity;
  double beta = 0.5;
  double eta = 0.9;
  Posynomial approx;

  static WeightingSpec identity() { return {}; }

  static WeightingSpec prelec(double beta, double eta) {
    if (!(beta > 0.0)) throw std::invalid_argument("prelec: beta must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("prelec: eta must lie in (0,1)");
    WeightingSpec w;
    w.kind = WeightingKind::Prelec;
    w.beta = beta;
    w.eta = eta;
    return w;
  }

  static WeightingSpec tversky_kahneman(double eta) {
    if (!(eta > 0.0 && eta <= 1.0))
      throw std::invalid_argument("tversky-kahneman: eta must lie in (0,1]");
    WeightingSpec w;
    w.kind = WeightingKind::TverskyKahneman;
    w.eta = eta;
    return w;
  }

  static WeightingSpec posynomial(Posynomial p) {
    WeightingSpec w;
    w.kind = WeightingKind::PosynomialApprox;
    w.approx = std::move(p);
    return w;
  }

  std::string describe() const {
    switch (kind) {
      case WeightingKind::Identity: return "identity";
      case WeightingKind::Prelec:
        return "prelec(beta=" + std::to_string(beta) + ",eta=" + std::to_string(eta) + ")";
      case WeightingKind::TverskyKahneman: return "tk(eta=" + std::to_string(eta) + ")";
      case WeightingKind::PosynomialApprox:
        return "posynomial(" + std::to_string(approx.terms.size()) + " terms)";
    }
    return "?";
  }
};

inline double eval_weighting(const WeightingSpec& w, double k) {
  if (!(k >= 0.0 && k <= 1.0))
    throw std::domain_error("weighting function argument " + std::to_string(k) +
                            " outside [0,1]");
  switch (w.kind) {
    case WeightingKind::Identity:
      return k;
    case WeightingKind::Prelec:
      if (k == 0.0) return 0.0; // limit value
      if (k == 1.0) return 1.0;
      return std::exp(-w.beta * std::pow(-std::log(k), w.eta));
    case WeightingKind::TverskyKahneman: {
      if (k == 0.0) return 0.0;
      if (k == 1.0) return 1.0;
      const double a = std::pow(k, w.eta);
      const double b = std::pow(1.0 - k, w.eta);
      return a / std::pow(a + b, 1.0 / w.eta);
    }
    case WeightingKind::PosynomialApprox:
      return w.approx(k);
  }
  throw std::logic_error("unreachable weighting kind");
}

/// Checks the weighting invariants: endpoint values (coefficient-sum window
/// for posynomial approximants) and monotonicity on a 1e-3 grid.
inline std::vector<std::string> check_weighting(const WeightingSpec& w) {
  std::vector<std::string> out;
  if (w.kind == WeightingKind::PosynomialApprox) {
    for (auto& v : check_posynomial(w.approx)) out.push_back(v);
    if (!out.empty()) return out;
    const double s = w.approx.coeff_sum();
    if (!(s >= 1.0 - 1e-3 && s <= 1.0 + 1e-3))
      out.push_back("posynomial coefficient sum " + std::to_string(s) +
                    " outside [1-1e-3, 1+1e-3]");
  } else {
    if (std::abs(eval_weighting(w, 0.0)) > 1e-6) out.push_back("w(0) != 0");
    if (std::abs(eval_weighting(w, 1.0) - 1.0) > 1e-6) out.push_back("w(1) != 1");
  }
  double prev = eval_weighting(w, 0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double k = static_cast<double>(i) / 1000.0;
    const double cur = eval_weighting(w, k);
    if (cur < prev - 1e-12) {
      out.push_back("not nondecreasing near k=" + std::to_string(k));
      break;
    }
    prev = cur;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Utility functions
// ---------------------------------------------------------------------------

enum class UtilityKind { Identity, PowerGain, PowerLoss };

/// PowerGain: u(x) = x^m on x >= 0, 0 < m <= 1 (concave gains).
/// PowerLoss: u(x) = -lambda * |x|^m on x <= 0 (convex losses, lambda > 0).
struct UtilitySpec {
  UtilityKind kind = UtilityKind::Identity;
  double exponent = 0.88;
  double loss_scale = 2.25;

  static UtilitySpec identity() { return {}; }

  static UtilitySpec power_gain(double m) {
    if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("power_gain: m must lie in (0,1]");
    UtilitySpec u;
    u.kind = UtilityKind::PowerGain;
    u.exponent = m;
    return u;
  }

  static UtilitySpec power_loss(double lambda, double m) {
    if (!(lambda > 0.0)) throw std::invalid_argument("power_loss: lambda must be positive");
    if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("power_loss: m must lie in (0,1]");
    UtilitySpec u;
    u.kind = UtilityKind::PowerLoss;
    u.exponent = m;
    u.loss_scale = lambda;
    return u;
  }

  /// True for utilities usable on the gains side of a stage objective.
  bool is_gains() const { return kind != UtilityKind::PowerLoss; }
};

inline double eval_utility(const UtilitySpec& u, double x) {
  switch (u.kind) {
    case UtilityKind::Identity:
      return x;
    case UtilityKind::PowerGain:
      if (x < 0.0) throw std::domain_error("power gain utility evaluated at negative value");
      return std::pow(x, u.exponent);
    case UtilityKind::PowerLoss:
      if (x > 0.0) throw std::domain_error("power loss utility evaluated at positive value");
      return -u.loss_scale * std::pow(-x, u.exponent);
  }
  throw std::logic_error("unreachable utility kind");
}

// ---------------------------------------------------------------------------
// Discrete CPT value
// ---------------------------------------------------------------------------

/// Finite discrete random variable as a list of (value, probability) atoms.
struct DiscreteOutcome {
  std::vector<std::pair<double, double>> atoms;

  std::vector<std::string> check() const {
    std::vector<std::string> out;
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!std::isfinite(atoms[i].first))
        out.push_back("atom " + std::to_string(i) + ": non-finite value");
      if (!(atoms[i].second >= 0.0 && atoms[i].second <= 1.0))
        out.push_back("atom " + std::to_string(i) + ": probability outside [0,1]");
      total += atoms[i].second;
    }
    if (std::abs(total - 1.0) > 1e-9)
      out.push_back("probabilities sum to " + std::to_string(total));
    return out;
  }
};

/// Step tail curve: thresholds ascending with P(value >= threshold).
struct TailCurve {
  struct Point {
    double threshold;
    double tail;
  };
  std::vector<Point> points;
};

/// Builds the tail curve of the successor-value distribution: states are
/// sorted ascending by value (stable by state id), equal values are merged
/// into one threshold, and tail_q accumulates the mixture mass of all states
/// at or above each threshold.
inline TailCurve tail_curve(const std::vector<std::pair<int, double>>& successor_values,
                            const std::vector<std::pair<int, double>>& mix) {
  std::vector<std::pair<int, double>> sorted = successor_values;
  for (auto& [s, v] : sorted) {
    if (!std::isfinite(v))
      throw std::invalid_argument("tail_curve: non-finite value at state " + std::to_string(s));
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  auto mass_of = [&mix](int state) {
    double p = 0.0;
    for (const auto& [s, q] : mix)
      if (s == state) p += q;
    return p;
  };

  TailCurve curve;
  for (const auto& [state, value] : sorted) {
    const double p = mass_of(state);
    if (!curve.points.empty() && curve.points.back().threshold == value) {
      curve.points.back().tail += p; // merged threshold; fixed up below
    } else {
      curve.points.push_back({value, p});
    }
  }
  // suffix sums turn per-threshold masses into tails
  double acc = 0.0;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    acc += it->tail;
    it->tail = acc;
  }
  return curve;
}

namespace detail {

// One side of the CPT integral: sum over sorted distinct transformed
// magnitudes y_1 < ... < y_n of (y_i - y_{i-1}) * w(P(magnitude >= y_i)),
// with y_0 = 0. `atoms` carries (magnitude, probability); magnitudes are > 0.
inline double cpt_side(std::vector<std::pair<double, double>> atoms, const WeightingSpec& w) {
  if (atoms.empty()) return 0.0;
  std::sort(atoms.begin(), atoms.end());
  // merge equal magnitudes
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().first == a.first)
      merged.back().second += a.second;
    else
      merged.push_back(a);
  }
  // tails by suffix sum
  std::vector<double> tail(merged.size());
  double acc = 0.0;
  for (std::size_t i = merged.size(); i-- > 0;) {
    acc += merged[i].second;
    tail[i] = acc;
  }
  double value = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const double clipped = std::min(1.0, std::max(0.0, tail[i]));
    value += (merged[i].first - prev) * eval_weighting(w, clipped);
    prev = merged[i].first;
  }
  return value;
}

} // namespace detail

/// Exact CPT value of a finite discrete random variable: outcomes are split
/// by sign, transformed through the sign's utility and aggregated as a
/// Riemann sum of weighted tail probabilities; returns gains minus losses.
/// With identity weighting and utilities this equals the plain expectation.
inline double cpt_value_discrete(const DiscreteOutcome& X, const WeightingSpec& w_plus,
                                 const WeightingSpec& w_minus, const UtilitySpec& u_plus,
                                 const UtilitySpec& u_minus) {
  if (auto bad = X.check(); !bad.empty())
    throw std::invalid_argument("cpt_value_discrete: " + bad.front());
  if (!u_plus.is_gains())
    throw std::invalid_argument("cpt_value_discrete: gains side requires a gains utility");

  std::vector<std::pair<double, double>> gains, losses;
  for (const auto& [x, p] : X.atoms) {
    if (p == 0.0) continue;
    if (x > 0.0) {
      gains.emplace_back(eval_utility(u_plus, x), p);
    } else if (x < 0.0) {
      const double magnitude = u_minus.kind == UtilityKind::PowerLoss
                                   ? -eval_utility(u_minus, x)
                                   : std::abs(eval_utility(u_minus, x));
      losses.emplace_back(magnitude, p);
    }
    // x == 0 contributes zero utility on either side
  }
  return detail::cpt_side(std::move(gains), w_plus) -
         detail::cpt_side(std::move(losses), w_minus);
}

} // namespace prospect
