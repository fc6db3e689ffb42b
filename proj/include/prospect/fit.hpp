#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prospect/cpt.hpp"
#include "prospect/posynomial.hpp"

namespace prospect {

/// Fit quality over the independent 1e-3-spaced evaluation grid on [0,1].
struct FitReport {
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  int term_count = 0;
  std::string target_id;
  std::string grid_desc;
  std::vector<std::string> warnings;
};

/// The seven-exponent monomial basis that reproduces the inverted-S shape of
/// the standard weighting functions with few terms.
inline std::vector<double> default_basis() {
  return {0.05, 0.1, 0.35, 0.4, 0.95, 3.0, 23.0};
}

/// 1000 log-spaced points on [1e-6, 0.1] plus 1000 uniform points on
/// [0.1, 1]: the log half resolves the non-Lipschitz behavior at zero.
inline std::vector<double> default_fit_grid() {
  std::vector<double> grid;
  grid.reserve(2000);
  for (int i = 0; i < 1000; ++i)
    grid.push_back(std::pow(10.0, -6.0 + 5.0 * static_cast<double>(i) / 999.0));
  for (int i = 0; i < 1000; ++i)
    grid.push_back(0.1 + 0.9 * static_cast<double>(i) / 999.0);
  return grid;
}

namespace detail {

/// Lawson-Hanson active-set non-negative least squares. Subproblems on the
/// passive set are solved with a rank-revealing decomposition; near rank
/// deficiency is reported through `warnings` instead of failing.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double kkt_tol,
                            std::vector<std::string>* warnings) {
  const int ncols = static_cast<int>(A.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ncols);
  std::vector<bool> passive(ncols, false);
  bool warned_rank = false;

  auto solve_passive = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd Ap(A.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) Ap.col(j) = A.col(idx[j]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Ap);
    if (!warned_rank && cod.rank() < static_cast<Eigen::Index>(idx.size())) {
      warned_rank = true;
      if (warnings != nullptr)
        warnings->push_back("basis is rank-deficient on the fitting grid (rank " +
                            std::to_string(cod.rank()) + " of " + std::to_string(idx.size()) +
                            " active columns)");
    }
    return Eigen::VectorXd(cod.solve(b));
  };

  const int max_outer = 30 * std::max(ncols, 1);
  for (int outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    int best = -1;
    double best_w = kkt_tol;
    for (int j = 0; j < ncols; ++j) {
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break; // KKT conditions met
    passive[best] = true;

    for (int inner = 0; inner < max_outer; ++inner) {
      std::vector<int> idx;
      for (int j = 0; j < ncols; ++j)
        if (passive[j]) idx.push_back(j);
      const Eigen::VectorXd s = solve_passive(idx);
      bool all_positive = true;
      for (std::size_t j = 0; j < idx.size(); ++j)
        if (s[j] <= 0.0) all_positive = false;
      if (all_positive) {
        x.setZero();
        for (std::size_t j = 0; j < idx.size(); ++j) x[idx[j]] = s[j];
        break;
      }
      // step toward s only as far as feasibility allows, then drop zeros
      double alpha = 1.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (s[j] <= 0.0) {
          const double xj = x[idx[j]];
          if (xj - s[j] > 0.0) alpha = std::min(alpha, xj / (xj - s[j]));
        }
      }
      for (std::size_t j = 0; j < idx.size(); ++j) {
        x[idx[j]] += alpha * (s[j] - x[idx[j]]);
        if (x[idx[j]] <= 1e-15) {
          x[idx[j]] = 0.0;
          passive[idx[j]] = false;
        }
      }
    }
  }
  return x;
}

inline std::vector<double> evaluation_grid() {
  std::vector<double> grid(1001);
  for (int i = 0; i <= 1000; ++i) grid[i] = static_cast<double>(i) / 1000.0;
  return grid;
}

inline void fill_error_report(FitReport& report, const WeightingSpec& target,
                              const Posynomial& approx) {
  const auto grid = evaluation_grid();
  double max_err = 0.0;
  double sum_err = 0.0;
  for (double k : grid) {
    const double err = std::abs(approx(k) - eval_weighting(target, k));
    max_err = std::max(max_err, err);
    sum_err += err;
  }
  report.max_abs_error = max_err;
  report.mean_abs_error = sum_err / static_cast<double>(grid.size());
  report.grid_desc = "uniform 1e-3 grid on [0,1]";
}

} // namespace detail

struct FitOptions {
  bool normalize = false;    // rescale so the coefficients sum to 1
  double prune_tol = 1e-8;   // drop coefficients below this after solving
  double kkt_tol = 1e-10;    // NNLS stationarity tolerance on the dual
};

/// Nonnegativity-constrained least-squares fit of a posynomial with the given
/// exponent basis to a weighting function over the fitting grid.
inline std::pair<Posynomial, FitReport> fit_posynomial(const WeightingSpec& target,
                                                       const std::vector<double>& basis,
                                                       const std::vector<double>& grid,
                                                       const FitOptions& options = {}) {
  if (basis.empty()) throw std::invalid_argument("fit_posynomial: empty basis");
  for (double a : basis)
    if (!(a > 0.0)) throw std::invalid_argument("fit_posynomial: exponents must be positive");
  if (grid.size() < 10 * basis.size())
    throw std::invalid_argument("fit_posynomial: grid needs at least 10 points per basis term");
  for (double k : grid)
    if (!(k > 0.0 && k <= 1.0))
      throw std::invalid_argument("fit_posynomial: grid points must lie in (0,1]");

  const int rows = static_cast<int>(grid.size());
  const int cols = static_cast<int>(basis.size());
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    b[i] = eval_weighting(target, grid[i]);
    for (int j = 0; j < cols; ++j) A(i, j) = std::pow(grid[i], basis[j]);
  }

  FitReport report;
  report.target_id = target.describe();
  {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (cod.rank() < static_cast<Eigen::Index>(cols))
      report.warnings.push_back("basis is rank-deficient on the fitting grid (rank " +
                                std::to_string(cod.rank()) + " of " + std::to_string(cols) +
                                " columns)");
  }
  Eigen::VectorXd c = detail::nnls(A, b, options.kkt_tol, &report.warnings);

  Posynomial fitted;
  for (int j = 0; j < cols; ++j)
    if (c[j] > options.prune_tol) fitted.terms.push_back({c[j], basis[j]});
  if (fitted.terms.empty()) fitted.terms.push_back({0.0, 1.0});
  if (options.normalize) {
    const double s = fitted.coeff_sum();
    if (s > 0.0)
      for (auto& t : fitted.terms) t.coeff /= s;
  }
  report.term_count = static_cast<int>(fitted.terms.size());
  detail::fill_error_report(report, target, fitted);
  return {std::move(fitted), std::move(report)};
}

/// Ordinary least-squares polynomial fit (integer exponents 0..degree) used
/// as the comparison baseline; returns coefficients in ascending power order.
inline std::pair<std::vector<double>, FitReport> fit_polynomial_baseline(
    const WeightingSpec& target, int degree, const std::vector<double>& grid) {
  if (degree < 1) throw std::invalid_argument("fit_polynomial_baseline: degree must be >= 1");
  const int rows = static_cast<int>(grid.size());
  const int cols = degree + 1;
  Eigen::MatrixXd V(rows, cols);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    b[i] = eval_weighting(target, grid[i]);
    double p = 1.0;
    for (int j = 0; j < cols; ++j) {
      V(i, j) = p;
      p *= grid[i];
    }
  }
  const Eigen::VectorXd c = V.colPivHouseholderQr().solve(b);

  FitReport report;
  report.target_id = target.describe();
  report.term_count = cols;
  report.grid_desc = "uniform 1e-3 grid on [0,1]";
  double max_err = 0.0;
  double sum_err = 0.0;
  const auto eval_grid = detail::evaluation_grid();
  for (double k : eval_grid) {
    double value = 0.0;
    double p = 1.0;
    for (int j = 0; j < cols; ++j) {
      value += c[j] * p;
      p *= k;
    }
    const double err = std::abs(value - eval_weighting(target, k));
    max_err = std::max(max_err, err);
    sum_err += err;
  }
  report.max_abs_error = max_err;
  report.mean_abs_error = sum_err / static_cast<double>(eval_grid.size());
  return {std::vector<double>(c.data(), c.data() + cols), std::move(report)};
}

/// Greedy forward selection over a candidate exponent set: each round adds
/// the exponent that most reduces the max error. Because no single exponent
/// can always move the dominant error region, the search tolerates up to two
/// stalled rounds (improvement below `min_improvement`) before stopping and
/// returns the best basis seen. Small bases matter because the conic
/// reformulations downstream grow with every term.
inline std::vector<double> select_basis_greedy(const WeightingSpec& target,
                                               const std::vector<double>& grid,
                                               int max_terms = 10,
                                               double min_improvement = 1e-4) {
  std::vector<double> candidates;
  for (int j = 1; j <= 19; ++j) candidates.push_back(0.05 * j);
  for (double a : {2.0, 3.0, 5.0, 10.0, 23.0}) candidates.push_back(a);

  auto max_error_of = [&](std::vector<double> basis) {
    std::sort(basis.begin(), basis.end());
    return fit_posynomial(target, basis, grid).second.max_abs_error;
  };

  std::vector<double> chosen, best_basis;
  double best_err = std::numeric_limits<double>::infinity();
  int stalled = 0;
  while (static_cast<int>(chosen.size()) < max_terms) {
    double round_best = std::numeric_limits<double>::infinity();
    double round_pick = 0.0;
    for (double cand : candidates) {
      if (std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) continue;
      std::vector<double> trial = chosen;
      trial.push_back(cand);
      const double err = max_error_of(trial);
      if (err < round_best) {
        round_best = err;
        round_pick = cand;
      }
    }
    if (round_pick == 0.0) break;
    chosen.push_back(round_pick);
    std::sort(chosen.begin(), chosen.end());
    if (round_best < best_err - min_improvement) {
      best_err = round_best;
      best_basis = chosen;
      stalled = 0;
    } else if (++stalled >= 2) {
      break;
    }
  }
  return best_basis.empty() ? chosen : best_basis;
}

} // namespace prospect
