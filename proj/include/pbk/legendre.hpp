#pragma once

/**
 * @file legendre.hpp
 * @brief Legendre duality between a radial potential and its symplectic potential.
 *
 * u(x) + phi(t) = x t with x = phi_t(t), t = u_x(x). Derivatives of u are
 * returned analytically: u_x = t(x) and u_xx = 1/phi_tt(t(x)).
 *
 * The exponent U(nu, x) = u(nu) - u(x) + (x - nu) u_x(x) controls the
 * pointwise norm e^{-k U(nu,x)} of the normalized monomial of degree n = nu k.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "pbk/error.hpp"
#include "pbk/potential.hpp"

namespace pbk {

class DualPotential {
 public:
  /// `t_max` is the upper end of the log-radius range; 0 is the disc.
  explicit DualPotential(RadialPotential p, double t_max = 0.0)
      : p_(std::move(p)), t_max_(t_max) {
    a_ = p_.phi_t(0.0);
    x_max_ = p_.phi_t(t_max_);
    x_floor_ = p_.phi_t(p_.t_floor);
    u_zero_ = -p_.phi(40.0 * p_.t_floor);
  }

  const RadialPotential& potential() const { return p_; }
  /// Boundary moment value: |z| = 1 corresponds to x = a.
  double a() const { return a_; }
  /// Largest admissible x (equals a unless the transform was extended past the disc).
  double x_max() const { return x_max_; }
  /// Moment value at the numerical floor t_floor.
  double x_floor() const { return x_floor_; }

  /// Inverse moment map: solves phi_t(t) = x by safeguarded Newton.
  double t_of_x(double x, std::optional<double> seed = std::nullopt) const {
    check_domain(x);
    double lo = p_.t_floor, hi = t_max_;
    for (int i = 0; p_.phi_t(lo) > x; ++i) {
      if (i > 60) throw NumericError("legendre", "could not bracket inverse moment map", x);
      lo = 2.0 * lo - 1.0;
    }
    if (p_.phi_t(hi) < x) return hi;  // x == x_max up to rounding
    double t = seed.value_or(0.5 * std::log(x / x_max_) + t_max_);
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    constexpr double kTol = 4.0 * std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 200; ++it) {
      const double g = p_.phi_t(t) - x;
      if (std::abs(g) <= kTol * x) return t;
      if (g > 0.0) hi = t; else lo = t;
      const double step = g / p_.phi_tt(t);
      double next = t - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) <= 1e-16 * std::max(1.0, std::abs(t))) return next;
      t = next;
    }
    throw NumericError("legendre", "Newton iteration for t(x) did not converge", x);
  }

  /// Solves t(x) along an increasing grid, seeding each solve with the previous root.
  std::vector<double> t_of_x_grid(std::span<const double> xs) const {
    std::vector<double> ts;
    ts.reserve(xs.size());
    std::optional<double> seed;
    for (double x : xs) {
      ts.push_back(t_of_x(x, seed));
      seed = ts.back();
    }
    return ts;
  }

  /// Symplectic potential u(x) = x t(x) - phi(t(x)); u(0) is the limit -phi(-inf).
  double u(double x) const {
    if (x == 0.0) return u_zero_;
    const double t = t_of_x(x);
    return x * t - p_.phi(t);
  }
  double u_x(double x) const { return t_of_x(x); }
  double u_xx(double x) const { return 1.0 / p_.phi_tt(t_of_x(x)); }

 private:
  void check_domain(double x) const {
    if (!(x > 0.0) || x > x_max_ * (1.0 + 1e-12)) {
      std::ostringstream os;
      os.precision(12);
      os << "legendre: x=" << x << " outside the moment domain (0, " << x_max_ << "]";
      throw DomainError(os.str());
    }
  }

  RadialPotential p_;
  double t_max_;
  double a_ = 1.0;
  double x_max_ = 1.0;
  double x_floor_ = 0.0;
  double u_zero_ = 0.0;
};

inline DualPotential transform(const RadialPotential& p, double t_max = 0.0) {
  return DualPotential(p, t_max);
}

/// U(nu, x) = u(nu) - u(x) + (x - nu) u_x(x), evaluated as u(nu) + phi(t) - nu t
/// with t = t(x). Clamped at 0 against rounding.
inline double exponent_U(const DualPotential& d, double nu, double x) {
  if (nu < 0.0 || nu > d.x_max() * (1.0 + 1e-12)) {
    throw DomainError("legendre: nu outside the moment domain");
  }
  const double t = d.t_of_x(x);
  const double value = d.u(nu) + d.potential().phi(t) - nu * t;
  return std::max(0.0, value);
}

/// Same as exponent_U with u(nu) precomputed (avoids a Newton solve in inner loops).
inline double exponent_U_with(const DualPotential& d, double nu, double u_nu, double t_x) {
  return std::max(0.0, u_nu + d.potential().phi(t_x) - nu * t_x);
}

/// Pointwise norm |s_{n,k}|_{k phi} = e^{-k U(n/k, x)} in (0, 1]; 0 once the
/// exponent passes -700.
inline double section_norm(const DualPotential& d, int n, int k, double x) {
  if (k < 1 || n < 0) throw DomainError("section_norm: requires k >= 1, n >= 0");
  const double e = -static_cast<double>(k) * exponent_U(d, static_cast<double>(n) / k, x);
  if (e < -700.0) return 0.0;
  return std::exp(e);
}

}  // namespace pbk
