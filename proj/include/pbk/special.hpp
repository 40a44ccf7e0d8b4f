#pragma once

// Normal distribution and regularized incomplete gamma functions.

#include <cmath>
#include <limits>
#include <numbers>

#include "pbk/error.hpp"

namespace pbk::special {

/// Standard normal distribution function Phi(z).
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Standard normal density Phi'(z).
inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline constexpr int kMaxIter = 10000;
inline constexpr double kEps = 1e-16;

// Series for P(a,x); converges for all x but is used for x < a + 1.
inline bool gamma_p_series(double a, double x, double& out) {
  double ap = a, del = 1.0 / a, sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) {
      out = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
      return true;
    }
  }
  return false;
}

// Modified Lentz continued fraction for Q(a,x); used for x >= a + 1.
inline bool gamma_q_fraction(double a, double x, double& out) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) {
      out = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x). Switches between the series
/// and the continued fraction at x = a + 1. Returns false on non-convergence.
inline bool try_gamma_p(double a, double x, double& out) {
  if (!(a > 0.0) || x < 0.0) throw DomainError("gamma_p: requires a > 0 and x >= 0");
  if (x == 0.0) {
    out = 0.0;
    return true;
  }
  if (x < a + 1.0) return detail::gamma_p_series(a, x, out);
  double q = 0.0;
  if (!detail::gamma_q_fraction(a, x, q)) return false;
  out = 1.0 - q;
  return true;
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation on the continued-fraction side.
inline bool try_gamma_q(double a, double x, double& out) {
  if (!(a > 0.0) || x < 0.0) throw DomainError("gamma_q: requires a > 0 and x >= 0");
  if (x == 0.0) {
    out = 1.0;
    return true;
  }
  if (x >= a + 1.0) return detail::gamma_q_fraction(a, x, out);
  double p = 0.0;
  if (!detail::gamma_p_series(a, x, p)) return false;
  out = 1.0 - p;
  return true;
}

/// P(N >= m) for N ~ Poisson(lambda) by direct summation of the mass function,
/// summing whichever side of the mean is shorter.
inline double poisson_tail_direct(long m, double lambda) {
  if (m <= 0) return 1.0;
  if (lambda <= 0.0) return 0.0;
  auto log_term = [&](long j) { return -lambda + j * std::log(lambda) - std::lgamma(j + 1.0); };
  if (static_cast<double>(m) > lambda) {
    double sum = 0.0;
    for (long j = m;; ++j) {
      const double term = std::exp(log_term(j));
      sum += term;
      if (term <= sum * 1e-18 || (term == 0.0 && j > lambda)) break;
    }
    return std::min(1.0, sum);
  }
  double lower = 0.0;
  for (long j = 0; j < m; ++j) lower += std::exp(log_term(j));
  return std::max(0.0, 1.0 - lower);
}

}  // namespace pbk::special
