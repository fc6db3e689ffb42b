#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace prospect {

/// One monomial c * k^a over a single nonnegative variable.
struct MonomialTerm {
  double coeff = 0.0;
  double exponent = 1.0;

  friend bool operator==(const MonomialTerm&, const MonomialTerm&) = default;
};

/// Sum of monomials with nonnegative coefficients and strictly positive
/// exponents. On [0, 1] such a function is nondecreasing, vanishes at 0 and
/// equals the coefficient sum at 1, which is what makes it usable as a
/// probability-weighting approximant.
struct Posynomial {
  std::vector<MonomialTerm> terms;

  static Posynomial identity() { return Posynomial{{MonomialTerm{1.0, 1.0}}}; }

  double coeff_sum() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.coeff;
    return s;
  }

  double operator()(double k) const {
    if (k < 0.0 || !std::isfinite(k))
      throw std::domain_error("posynomial evaluated at negative or non-finite point");
    double v = 0.0;
    for (const auto& t : terms) v += t.coeff * std::pow(k, t.exponent);
    return v;
  }

  friend bool operator==(const Posynomial&, const Posynomial&) = default;
};

/// Reports violations of the posynomial validity conditions (c >= 0, a > 0).
inline std::vector<std::string> check_posynomial(const Posynomial& p) {
  std::vector<std::string> out;
  if (p.terms.empty()) out.push_back("posynomial has no terms");
  for (std::size_t i = 0; i < p.terms.size(); ++i) {
    const auto& t = p.terms[i];
    if (!(t.coeff >= 0.0) || !std::isfinite(t.coeff))
      out.push_back("term " + std::to_string(i) + ": coefficient " + std::to_string(t.coeff) +
                    " is negative or non-finite");
    if (!(t.exponent > 0.0) || !std::isfinite(t.exponent))
      out.push_back("term " + std::to_string(i) + ": exponent " + std::to_string(t.exponent) +
                    " is not strictly positive");
  }
  return out;
}

/// Partition of posynomial terms by curvature of k^a on the nonnegative axis:
/// exponents <= 1 are concave (affine at exactly 1), exponents > 1 convex.
struct DcSplit {
  std::vector<MonomialTerm> concave_terms;
  std::vector<MonomialTerm> convex_terms;
};

inline DcSplit classify_terms(const Posynomial& p) {
  DcSplit split;
  for (const auto& t : p.terms) {
    if (t.exponent <= 1.0)
      split.concave_terms.push_back(t);
    else
      split.convex_terms.push_back(t);
  }
  return split;
}

} // namespace prospect
