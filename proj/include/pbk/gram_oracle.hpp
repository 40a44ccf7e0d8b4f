#pragma once

/**
 * @file gram_oracle.hpp
 * @brief Exact partial density on the disc from weighted monomial norms.
 *
 * Monomials are orthogonal for a circle-invariant weight, so the partial
 * density is a normalized sum with no Gram inversion:
 *
 *     rho(x) = sum_{n = ceil(eps k)}^{n_max} e^{2nt - 2k phi(t)} / ||z^n||^2,   t = t(x),
 *     ||z^n||^2 = int_{-inf}^0 e^{2nt - 2k phi(t)} phi_tt(t) dt.
 *
 * The angular factor 2pi is absorbed into the norm, so the measure in moment
 * coordinates is plain dx and the density integrates to the number of
 * retained monomials.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pbk/disc_pbk.hpp"
#include "pbk/error.hpp"
#include "pbk/legendre.hpp"
#include "pbk/potential.hpp"
#include "pbk/quadrature.hpp"

namespace pbk {

/// log ||z^n||^2 over t in (t_floor, 0], integrated in log space.
inline double log_monomial_norm_sq(const RadialPotential& p, long n, int k,
                                   double rel_tol = 1e-12) {
  if (n < 0 || k < 1) throw DomainError("monomial_norm_sq: requires n >= 0, k >= 1");
  const double kk = k;
  auto log_f = [&](double t) {
    return 2.0 * n * t - 2.0 * kk * p.phi(t) + std::log(p.phi_tt(t));
  };
  quad::Options opts;
  opts.abs_floor = 0.0;
  return quad::log_integrate(log_f, p.t_floor, 0.0, rel_tol, opts).log_value;
}

inline double monomial_norm_sq(const RadialPotential& p, long n, int k, double rel_tol = 1e-12) {
  return std::exp(log_monomial_norm_sq(p, n, k, rel_tol));
}

/// Default truncation floor((sigma + a)/2 k) with sigma = 0.8 a.
inline long default_n_max(double a, int k, double sigma = -1.0) {
  if (sigma < 0.0) sigma = 0.8 * a;
  return static_cast<long>(std::floor(0.5 * (sigma + a) * k + 1e-9));
}

class GramOracle {
 public:
  GramOracle(DualPotential d, int k, double epsilon, long n_max, double rel_tol = 1e-12)
      : d_(std::move(d)), k_(k), epsilon_(epsilon) {
    if (k < 1) throw DomainError("gram_oracle: k must be >= 1");
    if (epsilon < 0.0) throw DomainError("gram_oracle: eps must be >= 0");
    n_lo_ = static_cast<long>(std::ceil(epsilon * k - 1e-9));
    if (n_max < n_lo_) throw DomainError("gram_oracle: n_max must be >= ceil(eps k)");
    for (long n = n_lo_; n <= n_max; ++n) {
      log_norms_.push_back(log_monomial_norm_sq(d_.potential(), n, k, rel_tol));
    }
  }

  int k() const { return k_; }
  double epsilon() const { return epsilon_; }
  long n_lo() const { return n_lo_; }
  long n_max() const { return n_lo_ + static_cast<long>(log_norms_.size()) - 1; }
  double log_norm(long n) const { return log_norms_.at(static_cast<std::size_t>(n - n_lo_)); }
  const DualPotential& dual() const { return d_; }

  /// log of e^{2nt - 2k phi(t)} / ||z^n||^2 at log-radius t.
  double log_weight(long n, double t) const {
    return 2.0 * n * t - 2.0 * k_ * d_.potential().phi(t) - log_norm(n);
  }

  /// Log weights of all retained monomials at x, in order of n.
  std::vector<double> log_weights(double x) const {
    const double t = d_.t_of_x(x);
    std::vector<double> w;
    w.reserve(log_norms_.size());
    for (long n = n_lo_; n <= n_max(); ++n) w.push_back(log_weight(n, t));
    return w;
  }

  double log_pdf(double x) const {
    const auto w = log_weights(x);
    const double m = *std::max_element(w.begin(), w.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : w) s += std::exp(v - m);
    return m + std::log(s);
  }

  double pdf(double x) const { return std::exp(log_pdf(x)); }

  DensityProfile profile(std::span<const double> xs) const {
    DensityProfile p;
    p.k = k_;
    p.route = Route::oracle;
    p.x.assign(xs.begin(), xs.end());
    for (double x : xs) {
      p.log_value.push_back(log_pdf(x));
      p.value.push_back(std::exp(p.log_value.back()));
    }
    return p;
  }

 private:
  DualPotential d_;
  int k_;
  double epsilon_;
  long n_lo_ = 0;
  std::vector<double> log_norms_;
};

inline double exact_pdf(const RadialPotential& p, int k, double eps, long n_max, double x) {
  return GramOracle(DualPotential(p), k, eps, n_max).pdf(x);
}

struct CompareReport {
  double sup_abs = 0.0;
  double sup_rel = 0.0;
  /// sup |a - b| / k, the error on the scale of the normalized density.
  double sup_abs_scaled = 0.0;
  double argmax_x = 0.0;
  std::size_t argmax_index = 0;
};

/// Sup-norm comparison of two profiles on an identical grid. Relative error
/// is taken against |b| and skipped where b vanishes.
inline CompareReport compare(const DensityProfile& a, const DensityProfile& b) {
  if (a.x.size() != b.x.size() || a.value.size() != a.x.size() ||
      b.value.size() != b.x.size()) {
    throw DomainError("compare: profiles have different grids");
  }
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    if (a.x[i] != b.x[i]) throw DomainError("compare: profiles have different grids");
  }
  CompareReport r;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double diff = std::abs(a.value[i] - b.value[i]);
    if (diff > r.sup_abs) {
      r.sup_abs = diff;
      r.argmax_x = a.x[i];
      r.argmax_index = i;
    }
    if (b.value[i] != 0.0) r.sup_rel = std::max(r.sup_rel, diff / std::abs(b.value[i]));
  }
  const int k = std::max(a.k, 1);
  r.sup_abs_scaled = r.sup_abs / k;
  return r;
}

}  // namespace pbk
