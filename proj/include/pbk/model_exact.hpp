#pragma once

/**
 * @file model_exact.hpp
 * @brief Closed-form partial density of the flat model.
 *
 * For the weight e^{-k|z|^2} and sections vanishing to order >= m = ceil(eps k)
 * along {z_1 = 0}, the scaled density depends only on x = |z_1|^2 and is the
 * Poisson tail
 *
 *     k^{-n} rho(x) = e^{-kx} sum_{j >= m} (kx)^j / j! = P(N >= m),  N ~ Poisson(kx),
 *
 * which equals the regularized lower incomplete gamma function P(m, kx).
 * Its central-limit profile is Phi(sqrt(k) (x - eps) / sqrt(x)).
 */

#include <algorithm>
#include <cmath>
#include <optional>

#include "pbk/error.hpp"
#include "pbk/special.hpp"

namespace pbk {

struct ModelQuery {
  int k = 1;
  double epsilon = 0.0;
  double x = 1.0;
  /// Exact vanishing order when eps*k is meant as an integer; overrides ceil(eps k).
  std::optional<long> threshold{};

  long vanishing_order() const {
    if (threshold) return *threshold;
    return static_cast<long>(std::ceil(epsilon * k - 1e-9));
  }

  void validate() const {
    if (k < 1) throw DomainError("model: k must be >= 1");
    if (epsilon < 0.0) throw DomainError("model: eps must be >= 0");
    if (!std::isfinite(x) || x < 0.0) throw DomainError("model: x must be finite and >= 0");
    if (threshold && *threshold < 0) throw DomainError("model: threshold must be >= 0");
  }
};

/// Poisson tail by direct summation of the mass function.
inline double model_pdf_direct(const ModelQuery& q) {
  q.validate();
  return special::poisson_tail_direct(q.vanishing_order(), q.k * q.x);
}

/// Poisson tail via the regularized incomplete gamma function, falling back
/// to direct summation if the series or continued fraction fails to converge.
inline double model_pdf(const ModelQuery& q) {
  q.validate();
  const long m = q.vanishing_order();
  if (m == 0) return 1.0;
  const double lambda = q.k * q.x;
  if (lambda == 0.0) return 0.0;
  double p = 0.0;
  if (special::try_gamma_p(static_cast<double>(m), lambda, p)) {
    return std::clamp(p, 0.0, 1.0);
  }
  return special::poisson_tail_direct(m, lambda);
}

/// Central-limit profile Phi(sqrt(k)(x - eps)/sqrt(x)).
inline double model_pdf_leading(const ModelQuery& q) {
  q.validate();
  if (!(q.x > 0.0)) throw DomainError("model_pdf_leading: x must be > 0");
  return special::normal_cdf(std::sqrt(static_cast<double>(q.k)) * (q.x - q.epsilon) /
                             std::sqrt(q.x));
}

}  // namespace pbk
