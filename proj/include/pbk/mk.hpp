#pragma once

/**
 * @file mk.hpp
 * @brief Average normalized order of vanishing M_k along the origin.
 *
 *     M_k(x) = sum_n n w_n(x) / (k sum_n w_n(x)),   w_n = e^{2nt - 2k phi} / ||z^n||^2.
 *
 * Summing the partial densities over thresholds j = 1 .. floor(k sigma) gives
 * the same quantity up to sum_{n > k sigma} (n - k sigma) w_n, which is
 * exponentially small for x <= sigma/2.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "pbk/error.hpp"
#include "pbk/gram_oracle.hpp"
#include "pbk/legendre.hpp"
#include "pbk/potential.hpp"

namespace pbk {

namespace detail {

// Weights w_n / max_n w_n, n = 0 .. n_max.
inline std::vector<double> mk_relative_weights(const GramOracle& g, double x) {
  auto w = g.log_weights(x);
  const double m = *std::max_element(w.begin(), w.end());
  if (!std::isfinite(m)) {
    throw NumericError("mk", "all basis weights underflow (degenerate denominator)", x);
  }
  for (double& v : w) v = std::exp(v - m);
  return w;
}

}  // namespace detail

inline double mk_exact(const GramOracle& g, double x) {
  if (g.n_lo() != 0) throw DomainError("mk: oracle must retain all monomials (eps = 0)");
  if (x == 0.0) return 0.0;
  const auto w = detail::mk_relative_weights(g, x);
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    num += static_cast<double>(n) * w[n];
    den += w[n];
  }
  return num / (g.k() * den);
}

inline double mk_exact(const RadialPotential& p, int k, double x, long n_max) {
  return mk_exact(GramOracle(DualPotential(p), k, 0.0, n_max), x);
}

/// Sum of partial densities rho^{j/k}, j = 1 .. floor(k sigma), over k rho^0.
inline double mk_via_pdf_sum(const GramOracle& g, double x, double sigma) {
  if (g.n_lo() != 0) throw DomainError("mk: oracle must retain all monomials (eps = 0)");
  if (!(x <= 0.5 * sigma)) {
    std::ostringstream os;
    os << "mk_via_pdf_sum: x=" << x << " outside the window x <= sigma/2 = " << 0.5 * sigma;
    throw DomainError(os.str());
  }
  if (x == 0.0) return 0.0;
  const auto w = detail::mk_relative_weights(g, x);
  // suffix[j] = sum_{n >= j} w_n, i.e. the partial density with threshold j.
  std::vector<double> suffix(w.size() + 1, 0.0);
  for (std::size_t n = w.size(); n-- > 0;) suffix[n] = suffix[n + 1] + w[n];
  const long top = std::min<long>(static_cast<long>(std::floor(g.k() * sigma + 1e-9)),
                                  static_cast<long>(w.size()));
  double s = 0.0;
  for (long j = 1; j <= top; ++j) s += suffix[static_cast<std::size_t>(j)];
  return s / (g.k() * suffix[0]);
}

inline double mk_via_pdf_sum(const RadialPotential& p, int k, double x, double sigma) {
  DualPotential d(p);
  return mk_via_pdf_sum(GramOracle(d, k, 0.0, default_n_max(d.a(), k)), x, sigma);
}

/// Leading term of M_k: the moment map itself.
inline double mk_leading(double x) {
  if (x < 0.0) throw DomainError("mk_leading: x must be >= 0");
  return x;
}

}  // namespace pbk
