#pragma once

/**
 * @file envelope.hpp
 * @brief Extremal envelope, forbidden region and measured decay rates.
 *
 * In moment coordinates the envelope is
 *
 *     psi_eps(x) = eps t(x) - u(eps)   for x <= eps,
 *     psi_eps(x) = phi(t(x))           for x >= eps,
 *
 * so that (phi - psi_eps)(x) = U(eps, x) on the forbidden side. The density
 * there decays like e^{-2k U(eps, x)}.
 */

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "pbk/disc_pbk.hpp"
#include "pbk/error.hpp"
#include "pbk/legendre.hpp"

namespace pbk {

namespace detail {

inline void check_envelope_args(const DualPotential& d, double eps, double x) {
  if (!(eps > 0.0 && eps < d.a())) throw DomainError("envelope: eps must lie in (0, a)");
  if (!(x > 0.0 && x < d.a())) throw DomainError("envelope: x must lie in (0, a)");
}

}  // namespace detail

/// Left branch eps t(x) - u(eps), defined for every x in the moment domain.
inline double envelope_left_branch(const DualPotential& d, double eps, double x) {
  return eps * d.t_of_x(x) - d.u(eps);
}

/// Right branch phi(t(x)).
inline double envelope_right_branch(const DualPotential& d, double x) {
  return d.potential().phi(d.t_of_x(x));
}

inline double envelope_psi(const DualPotential& d, double eps, double x) {
  detail::check_envelope_args(d, eps, x);
  return x <= eps ? envelope_left_branch(d, eps, x) : envelope_right_branch(d, x);
}

/// (phi - psi_eps)(x) = U(eps, x) for x < eps and 0 beyond.
inline double envelope_gap(const DualPotential& d, double eps, double x) {
  detail::check_envelope_args(d, eps, x);
  if (x >= eps) return 0.0;
  return exponent_U(d, eps, x);
}

/// Predicted exponential rate of the density in k: 2 (phi - psi_eps)(x).
inline double predicted_decay_rate(const DualPotential& d, double eps, double x) {
  return 2.0 * envelope_gap(d, eps, x);
}

struct C1Report {
  double left_slope = 0.0;
  double right_slope = 0.0;
  double defect = 0.0;
  double left_curvature = 0.0;
  double right_curvature = 0.0;
};

/// One-sided first differences (step 1e-5) and second differences (step 1e-3)
/// of psi_eps at x = eps, each Richardson-extrapolated once.
inline C1Report c1_defect_report(const DualPotential& d, double eps) {
  if (!(eps > 0.0 && eps < d.a())) throw DomainError("c1_defect: eps must be interior");
  auto left = [&](double x) { return envelope_left_branch(d, eps, x); };
  auto right = [&](double x) { return envelope_right_branch(d, x); };
  const double f0 = right(eps);  // both branches agree at eps
  auto slope = [&](auto&& f, double dir, double h) {
    auto one = [&](double s) { return dir * (f(eps + dir * s) - f0) / s; };
    return 2.0 * one(0.5 * h) - one(h);
  };
  auto curvature = [&](auto&& f, double dir, double h) {
    auto one = [&](double s) {
      return (f0 - 2.0 * f(eps + dir * s) + f(eps + 2.0 * dir * s)) / (s * s);
    };
    return 2.0 * one(0.5 * h) - one(h);
  };
  C1Report r;
  r.left_slope = slope(left, -1.0, 1e-5);
  r.right_slope = slope(right, 1.0, 1e-5);
  r.defect = std::abs(r.left_slope - r.right_slope);
  r.left_curvature = curvature(left, -1.0, 1e-3);
  r.right_curvature = curvature(right, 1.0, 1e-3);
  return r;
}

inline double c1_defect(const DualPotential& d, double eps) { return c1_defect_report(d, eps).defect; }

/// Half-open moment interval [lo, hi); empty when lo == hi.
struct MomentInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(hi > lo); }
  bool contains(double x) const { return x >= lo && x < hi; }
};

inline MomentInterval forbidden_region(double eps) {
  if (eps < 0.0) throw DomainError("forbidden_region: eps must be >= 0");
  return {0.0, eps};
}

struct DecayFit {
  /// Exponential rate in k.
  double rate = 0.0;
  /// Coefficient of log k (polynomial prefactor).
  double log_k_coefficient = 0.0;
  double intercept = 0.0;
};

namespace detail {

inline double log_density_at(const DensityProfile& p, double x) {
  auto lv = [&](std::size_t i) {
    if (!p.log_value.empty()) return p.log_value[i];
    if (!(p.value[i] > 0.0)) {
      std::ostringstream os;
      os << "decay_rate_measure: nonpositive density at k=" << p.k;
      throw NumericError("envelope", os.str(), p.x[i]);
    }
    return std::log(p.value[i]);
  };
  if (p.x.empty() || x < p.x.front() || x > p.x.back()) {
    throw DomainError("decay_rate_measure: x outside the profile grid");
  }
  std::size_t i = 0;
  while (i + 1 < p.x.size() && p.x[i + 1] < x) ++i;
  if (p.x[i] == x || i + 1 == p.x.size()) return lv(i);
  if (p.x[i + 1] == x) return lv(i + 1);
  const double w = (x - p.x[i]) / (p.x[i + 1] - p.x[i]);
  return (1.0 - w) * lv(i) + w * lv(i + 1);
}

// Solves the 3x3 normal equations of a least-squares fit by Gaussian elimination.
inline std::array<double, 3> least_squares3(const std::vector<std::array<double, 3>>& rows,
                                            const std::vector<double>& y) {
  double A[3][4] = {};
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) A[i][j] += rows[n][i] * rows[n][j];
      A[i][3] += rows[n][i] * y[n];
    }
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    }
    for (int j = 0; j < 4; ++j) std::swap(A[c][j], A[piv][j]);
    if (A[c][c] == 0.0) throw NumericError("envelope", "singular decay fit");
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (int j = c; j < 4; ++j) A[r][j] -= f * A[c][j];
    }
  }
  return {A[0][3] / A[0][0], A[1][3] / A[1][1], A[2][3] / A[2][2]};
}

}  // namespace detail

/// Fits -log rho = rate k + p log k + c over profiles at three or more k and
/// returns the fitted exponential rate together with the prefactor terms.
inline DecayFit decay_rate_fit(std::span<const DensityProfile> profiles, double x) {
  if (profiles.size() < 3) throw DomainError("decay_rate_measure: needs profiles at >= 3 values of k");
  std::vector<std::array<double, 3>> rows;
  std::vector<double> y;
  for (const auto& p : profiles) {
    const double k = p.k;
    rows.push_back({k, std::log(k), 1.0});
    y.push_back(-detail::log_density_at(p, x));
  }
  const auto c = detail::least_squares3(rows, y);
  return {c[0], c[1], c[2]};
}

inline double decay_rate_measure(std::span<const DensityProfile> profiles, double x) {
  return decay_rate_fit(profiles, x).rate;
}

}  // namespace pbk
