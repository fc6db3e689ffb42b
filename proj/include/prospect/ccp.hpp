#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "prospect/cpt.hpp"
#include "prospect/mdp.hpp"
#include "prospect/posynomial.hpp"
#include "prospect/simplex.hpp"

namespace prospect {

/// Power bases in stage objectives are clamped below at this value so that
/// gradients of terms with exponents < 1 stay finite at the boundary; the
/// induced objective perturbation is at most sum_k c_k * clamp^(a_k).
inline constexpr double kPowerBaseClamp = 1e-12;

enum class OptSense { Maximize, Minimize };

/// One state's stage problem over the action simplex:
///
///   opt_sigma  affine_constant + affine_linear . sigma
///              + sum_q D_q * sum_k c_k * (t_q . sigma)^(a_k)
///
/// where D_q >= 0 are utility increments between consecutive sorted successor
/// values and t_q maps the policy to the probability of reaching a successor
/// of value at least the q-th smallest. t_1 is all-ones (the full tail is
/// certain) and the tail vectors decrease componentwise in q.
struct DcStageProblem {
  int num_actions = 0;
  std::vector<double> increments;               // D_q
  std::vector<std::vector<double>> tail_coeffs; // [q][action]
  Posynomial weighting;
  DcSplit split;
  std::vector<double> affine_linear; // empty when absent
  double affine_constant = 0.0;
  OptSense sense = OptSense::Maximize;
  std::vector<int> successor_order; // sorted successor state indices

  friend bool operator==(const DcStageProblem&, const DcStageProblem&) = default;
};

struct CcpIterate {
  std::vector<double> sigma;
  double surrogate_value = 0.0;
  double objective = 0.0;
};

/// Per-start record of the CCP rounds; `objective` is monotone in the
/// problem's optimization sense.
struct CcpTrace {
  std::vector<CcpIterate> iterates;
};

struct StageSolveResult {
  std::vector<double> sigma;
  double value = 0.0;
  std::vector<CcpTrace> traces; // one per start
};

// ---------------------------------------------------------------------------
// Problem construction and evaluation
// ---------------------------------------------------------------------------

/// Builds the stage problem for state `s` given the next-stage values.
/// `cost_offset` is the current state's one-step cost (added inside the
/// utility); `reward_row`, when present, contributes the policy-affine
/// identity-utility reward term (per enabled-action slot, already sliced to
/// the current time). Successor values may be negative only with the identity
/// utility, in which case the thresholds are shifted up and the objective is
/// corrected by an affine constant, which leaves the optimizer unchanged.
inline DcStageProblem build_stage_objective(int s, const std::vector<double>& next_values,
                                            const Mdp& m, const Posynomial& weighting,
                                            const UtilitySpec& utility, double cost_offset = 0.0,
                                            const std::vector<double>* reward_row = nullptr) {
  if (auto bad = check_posynomial(weighting); !bad.empty())
    throw std::invalid_argument("build_stage_objective: " + bad.front());
  if (!utility.is_gains())
    throw std::invalid_argument("build_stage_objective: stage objectives use a gains utility");
  if (s < 0 || s >= m.num_states())
    throw std::invalid_argument("build_stage_objective: state index out of range");
  if (m.enabled[s].empty())
    throw std::invalid_argument("build_stage_objective: state has no enabled actions");

  DcStageProblem prob;
  prob.num_actions = static_cast<int>(m.enabled[s].size());
  prob.weighting = weighting;
  prob.split = classify_terms(weighting);

  // successors sorted ascending by value, stable by state index
  std::vector<int> succ = m.successors(s);
  std::sort(succ.begin(), succ.end(), [&](int a, int b) {
    if (next_values[a] != next_values[b]) return next_values[a] < next_values[b];
    return a < b;
  });
  prob.successor_order = succ;
  const int Q = static_cast<int>(succ.size());

  double shift = 0.0;
  const double lowest = cost_offset + next_values[succ.front()];
  if (lowest < 0.0) {
    if (utility.kind != UtilityKind::Identity)
      throw std::invalid_argument(
          "build_stage_objective: negative stage values require the identity utility");
    shift = -lowest;
  }

  prob.increments.resize(Q);
  double prev = 0.0; // u(0): the Riemann sum starts at threshold zero
  for (int q = 0; q < Q; ++q) {
    const double y = eval_utility(utility, cost_offset + next_values[succ[q]] + shift);
    prob.increments[q] = y - prev;
    prev = y;
  }

  // tail vectors: suffix sums of each action's row over the sorted order
  std::vector<int> rank(m.num_states(), -1);
  for (int q = 0; q < Q; ++q) rank[succ[q]] = q;
  prob.tail_coeffs.assign(Q, std::vector<double>(prob.num_actions, 0.0));
  for (int slot = 0; slot < prob.num_actions; ++slot)
    for (const auto& e : m.rows[s][slot]) prob.tail_coeffs[rank[e.state]][slot] += e.prob;
  for (int q = Q - 2; q >= 0; --q)
    for (int slot = 0; slot < prob.num_actions; ++slot)
      prob.tail_coeffs[q][slot] += prob.tail_coeffs[q + 1][slot];

  if (reward_row != nullptr) {
    if (static_cast<int>(reward_row->size()) != prob.num_actions)
      throw std::invalid_argument("build_stage_objective: reward row size mismatch");
    const double wsum = weighting.coeff_sum();
    prob.affine_linear.resize(prob.num_actions);
    for (int slot = 0; slot < prob.num_actions; ++slot)
      prob.affine_linear[slot] = wsum * (*reward_row)[slot];
  }
  if (shift != 0.0) prob.affine_constant -= weighting.coeff_sum() * shift;
  return prob;
}

namespace detail {

inline void require_on_simplex(const DcStageProblem& prob, const std::vector<double>& sigma) {
  if (static_cast<int>(sigma.size()) != prob.num_actions)
    throw std::invalid_argument("stage sigma has wrong dimension");
  double sum = 0.0;
  for (double p : sigma) {
    if (p < -1e-7) throw std::invalid_argument("stage sigma has negative entries");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-7)
    throw std::invalid_argument("stage sigma sums to " + std::to_string(sum));
}

inline double clamped_base(const std::vector<double>& tail, const std::vector<double>& sigma) {
  double b = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) b += tail[i] * sigma[i];
  return std::max(b, kPowerBaseClamp);
}

} // namespace detail

/// Exact stage objective at a policy on the simplex (within 1e-7).
inline double stage_objective_value(const DcStageProblem& prob, const std::vector<double>& sigma) {
  detail::require_on_simplex(prob, sigma);
  double value = prob.affine_constant;
  if (!prob.affine_linear.empty())
    for (int i = 0; i < prob.num_actions; ++i) value += prob.affine_linear[i] * sigma[i];
  for (std::size_t q = 0; q < prob.increments.size(); ++q) {
    const double d = prob.increments[q];
    if (d == 0.0) continue;
    const double base = detail::clamped_base(prob.tail_coeffs[q], sigma);
    double phi = 0.0;
    for (const auto& term : prob.weighting.terms) phi += term.coeff * std::pow(base, term.exponent);
    value += d * phi;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Convexification
// ---------------------------------------------------------------------------

/// Stage surrogate: the curvature-compatible power terms are kept, the
/// opposing ones are replaced by their first-order expansion. Holds a pointer
/// to the problem it was built from; keep the problem alive while using it.
struct StageSurrogate {
  struct PowerTerm {
    int q;
    double coeff; // D_q * c_k
    double exponent;
  };
  const DcStageProblem* problem = nullptr;
  std::vector<PowerTerm> kept;
  std::vector<double> linear;
  double constant = 0.0;

  /// Value and (optionally) gradient; +/- orientation matches the problem's
  /// own objective regardless of sense.
  double eval(const std::vector<double>& sigma, std::vector<double>* grad) const {
    double value = constant;
    if (grad != nullptr) grad->assign(sigma.size(), 0.0);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      value += linear[i] * sigma[i];
      if (grad != nullptr) (*grad)[i] += linear[i];
    }
    for (const auto& term : kept) {
      const auto& tail = prob_tails(term.q);
      const double base = detail::clamped_base(tail, sigma);
      value += term.coeff * std::pow(base, term.exponent);
      if (grad != nullptr) {
        const double slope = term.coeff * term.exponent * std::pow(base, term.exponent - 1.0);
        if (!std::isfinite(slope))
          throw std::runtime_error("stage surrogate: non-finite gradient in power term with exponent " +
                                   std::to_string(term.exponent));
        for (std::size_t i = 0; i < sigma.size(); ++i) (*grad)[i] += slope * tail[i];
      }
    }
    return value;
  }

private:
  const std::vector<double>& prob_tails(int q) const { return problem->tail_coeffs[q]; }
};

/// First-order convexification at sigma0 per the problem's sense: for
/// maximization the convex power terms (a > 1) are replaced by tangent
/// planes, leaving a concave surrogate; for minimization the concave terms
/// (a <= 1) are, leaving a convex one. The surrogate agrees with the true
/// objective at sigma0 and bounds it from the safe side, which is what makes
/// the outer loop monotone.
inline StageSurrogate convexify(const DcStageProblem& prob, const std::vector<double>& sigma0) {
  detail::require_on_simplex(prob, sigma0);
  StageSurrogate surrogate;
  surrogate.problem = &prob;
  surrogate.linear.assign(prob.num_actions, 0.0);
  surrogate.constant = prob.affine_constant;
  if (!prob.affine_linear.empty())
    for (int i = 0; i < prob.num_actions; ++i) surrogate.linear[i] += prob.affine_linear[i];

  const bool linearize_convex = prob.sense == OptSense::Maximize;
  for (std::size_t q = 0; q < prob.increments.size(); ++q) {
    const double d = prob.increments[q];
    if (d == 0.0) continue;
    const double base0 = detail::clamped_base(prob.tail_coeffs[q], sigma0);
    for (const auto& term : prob.weighting.terms) {
      const bool is_convex = term.exponent > 1.0;
      if (is_convex == linearize_convex) {
        // tangent at base0: f(b0) + f'(b0) (b - b0)
        const double f0 = term.coeff * std::pow(base0, term.exponent);
        const double slope = term.coeff * term.exponent * std::pow(base0, term.exponent - 1.0);
        surrogate.constant += d * (f0 - slope * base0);
        for (int i = 0; i < prob.num_actions; ++i)
          surrogate.linear[i] += d * slope * prob.tail_coeffs[q][i];
      } else {
        surrogate.kept.push_back({static_cast<int>(q), d * term.coeff, term.exponent});
      }
    }
  }
  return surrogate;
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

/// The first few deterministic vertices plus the uniform distribution.
/// Vertices come first so that flat objectives resolve to the lowest action
/// id, matching the value-iteration tie-break.
inline std::vector<std::vector<double>> default_starts(int num_actions, int max_vertices = 8) {
  std::vector<std::vector<double>> starts;
  for (int i = 0; i < num_actions && i < max_vertices; ++i) {
    std::vector<double> vertex(num_actions, 0.0);
    vertex[i] = 1.0;
    starts.push_back(std::move(vertex));
  }
  starts.emplace_back(num_actions, 1.0 / num_actions);
  return starts;
}

/// Convex-concave iterations from each start: convexify at the current
/// iterate, optimize the surrogate over the simplex, repeat until the true
/// objective improves by less than `tol` or `max_iter` rounds pass. Returns
/// the best endpoint across starts and the full per-start traces.
inline StageSolveResult ccp_solve_stage(const DcStageProblem& prob,
                                        const std::vector<std::vector<double>>& starts,
                                        double tol = 1e-6, int max_iter = 50, double pg_tol = 1e-8,
                                        int pg_max_iter = 500) {
  if (starts.empty()) throw std::invalid_argument("ccp_solve_stage: no starting points");
  const double sign = prob.sense == OptSense::Maximize ? 1.0 : -1.0;

  StageSolveResult best;
  bool have_best = false;
  for (const auto& start : starts) {
    std::vector<double> sigma = project_to_simplex(start);
    double objective = stage_objective_value(prob, sigma);
    CcpTrace trace;
    trace.iterates.push_back({sigma, objective, objective});
    for (int round = 0; round < max_iter; ++round) {
      const StageSurrogate surrogate = convexify(prob, sigma);
      auto oriented = [&](const std::vector<double>& x, std::vector<double>* grad) {
        const double v = surrogate.eval(x, grad);
        if (grad != nullptr && sign < 0.0)
          for (auto& g : *grad) g = -g;
        return sign * v;
      };
      SimplexAscentResult inner = maximize_over_simplex(oriented, sigma, pg_tol, pg_max_iter);
      const double next_objective = stage_objective_value(prob, inner.point);
      trace.iterates.push_back({inner.point, sign * inner.value, next_objective});
      const double improvement = sign * (next_objective - objective);
      sigma = std::move(inner.point);
      objective = next_objective;
      if (improvement < tol) break;
    }
    if (!have_best || sign * (objective - best.value) > 0.0) {
      best.sigma = sigma;
      best.value = objective;
      have_best = true;
    }
    best.traces.push_back(std::move(trace));
  }
  return best;
}

} // namespace prospect
