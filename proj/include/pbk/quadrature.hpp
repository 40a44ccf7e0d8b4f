#pragma once

/**
 * @file quadrature.hpp
 * @brief Adaptive one-dimensional integration.
 *
 * Every density and norm in the library reduces to a weighted integral on
 * an interval. The workhorse is a globally adaptive 7/15-point
 * Gauss-Kronrod bisection scheme: the interval with the largest local error
 * estimate is split until the summed estimate meets the tolerance.
 *
 * A log-space variant integrates e^{g(t)} when g reaches magnitudes where
 * e^g over- or underflows, returning log of the integral.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "pbk/error.hpp"

namespace pbk::quad {

struct IntegrationResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

/// Result of a log-space integration: log of the integral and a relative
/// error estimate (which is also the absolute error of log_value to first order).
struct LogIntegrationResult {
  double log_value = 0.0;
  double rel_error = 0.0;
  std::size_t evaluations = 0;
};

/// Thrown when the adaptive scheme exhausts its evaluation budget. Carries
/// the partial estimate.
class QuadratureError : public NumericError {
 public:
  QuadratureError(const std::string& what, IntegrationResult partial,
                  std::optional<double> abscissa = std::nullopt)
      : NumericError("quadrature", what, abscissa), partial_(partial) {}
  const IntegrationResult& partial() const noexcept { return partial_; }

 private:
  IntegrationResult partial_;
};

struct Options {
  double abs_floor = 1e-14;
  std::size_t max_evaluations = 1'000'000;
  /// Interior points at which the initial partition is split.
  std::vector<double> breakpoints{};
};

namespace detail {

// Kronrod abscissae on [-1,1] (nonnegative half), 7-point Gauss nodes are the odd entries.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

inline double checked(const std::function<double(double)>& f, double t) {
  const double v = f(t);
  if (std::isnan(v)) {
    throw NumericError("quadrature", "integrand returned NaN", t);
  }
  return v;
}

// One 15-point Kronrod panel with the QUADPACK error heuristic.
inline Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = checked(f, center);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);
  std::array<double, 7> fv1{}, fv2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = checked(f, center - dx);
    const double f2 = checked(f, center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  }
  const double value = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * resabs, err);
  }
  return {a, b, value, err};
}

}  // namespace detail

/// Integrates f over [a,b] until the error estimate is below
/// max(rel_tol*|value|, opts.abs_floor).
inline IntegrationResult integrate(const std::function<double(double)>& f, double a,
                                   double b, double rel_tol, const Options& opts = {}) {
  if (!(a < b)) throw DomainError("integrate: requires a < b");
  if (!(rel_tol > 0.0)) throw DomainError("integrate: rel_tol must be positive");

  std::vector<double> cuts{a};
  for (double p : opts.breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment> heap;
  IntegrationResult out;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto s = detail::gk15(f, cuts[i], cuts[i + 1]);
    out.evaluations += 15;
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }

  // The panel error heuristic never drops below about 50 eps |value|, so tighter
  // relative targets are clamped to what it can certify.
  const double rel = std::max(rel_tol, 100.0 * std::numeric_limits<double>::epsilon());
  auto converged = [&] { return total_err <= std::max(rel * std::abs(total), opts.abs_floor); };
  while (!converged()) {
    if (out.evaluations + 30 > opts.max_evaluations) {
      out.value = total;
      out.error_estimate = total_err;
      throw QuadratureError("evaluation budget exhausted before convergence", out);
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval can no longer be split in floating point; accept what we have.
      heap.push({worst.a, worst.b, worst.value, 0.0});
      total_err -= worst.error;
      continue;
    }
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the segment list to shed accumulated cancellation in the running totals.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error_estimate = std::max(0.0, err);
  return out;
}

/// Integrates an eventually monotone decaying f over [a, inf) by summing
/// geometrically growing panels until the last panels fall below
/// rel_tol*|value|.
inline IntegrationResult integrate_decaying(const std::function<double(double)>& f, double a,
                                            double rel_tol, double initial_step = 1.0,
                                            const Options& opts = {}) {
  if (!(rel_tol > 0.0)) throw DomainError("integrate_decaying: rel_tol must be positive");
  IntegrationResult out;
  double lo = a, step = initial_step;
  double prev_panel = std::numeric_limits<double>::infinity();
  int growing = 0, small = 0;
  for (int panel = 0; panel < 200; ++panel) {
    const double hi = lo + step;
    Options popts = opts;
    popts.abs_floor = opts.abs_floor * 1e-3;
    auto r = integrate(f, lo, hi, rel_tol * 0.1, popts);
    out.value += r.value;
    out.error_estimate += r.error_estimate;
    out.evaluations += r.evaluations;
    const double mag = std::abs(r.value);
    if (mag > prev_panel && panel > 2) {
      if (++growing >= 4) {
        throw QuadratureError("integrand does not decay (tail estimate growing)", out, hi);
      }
    } else {
      growing = 0;
    }
    if (mag <= rel_tol * std::abs(out.value) * 0.1 || (mag == 0.0 && panel > 0)) {
      if (++small >= 2) {
        out.error_estimate += mag;
        return out;
      }
    } else {
      small = 0;
    }
    prev_panel = mag;
    lo = hi;
    step *= 2.0;
  }
  throw QuadratureError("tail did not fall below tolerance", out);
}

/// Integrates e^{log_f(t)} over [a,b] and returns the logarithm of the
/// integral. The exponent is shifted by its sampled maximum before
/// exponentiating, so exponents of magnitude 10^3 and beyond are safe.
inline LogIntegrationResult log_integrate(const std::function<double(double)>& log_f, double a,
                                          double b, double rel_tol, Options opts = {}) {
  if (!(a < b)) throw DomainError("log_integrate: requires a < b");
  constexpr int kSamples = 512;
  double best_t = a, best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kSamples; ++i) {
    const double t = a + (b - a) * i / kSamples;
    const double v = log_f(t);
    if (std::isnan(v)) throw NumericError("quadrature", "log-integrand returned NaN", t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  for (double p : opts.breakpoints) {
    if (p >= a && p <= b) {
      const double v = log_f(p);
      if (v > best) {
        best = v;
        best_t = p;
      }
    }
  }
  // Golden-section refinement of the peak within one sample spacing; the
  // sampled maximum may sit a cell away from a sharp true peak.
  {
    const double h = (b - a) / kSamples;
    double lo = std::max(a, best_t - h), hi = std::min(b, best_t + h);
    constexpr double g = 0.6180339887498949;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = log_f(c), fd = log_f(d);
    for (int it = 0; it < 60; ++it) {
      if (fc > fd) {
        hi = d; d = c; fd = fc; c = hi - g * (hi - lo); fc = log_f(c);
      } else {
        lo = c; c = d; fc = fd; d = lo + g * (hi - lo); fd = log_f(d);
      }
    }
    const double tm = 0.5 * (lo + hi);
    const double vm = log_f(tm);
    if (vm > best) {
      best = vm;
      best_t = tm;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericError("quadrature", "log-integrand is -inf on the whole interval", a);
  }
  // A peak narrower than the Kronrod node spacing of the panels adjoining best_t
  // would go unseen; a geometric ladder of cuts resolves any width down to 1e-6 h.
  {
    const double h = (b - a) / kSamples;
    for (double w = h; w > 1e-6 * h; w *= 0.25) {
      opts.breakpoints.push_back(best_t - w);
      opts.breakpoints.push_back(best_t + w);
    }
  }
  opts.breakpoints.push_back(best_t);
  opts.abs_floor = std::min(opts.abs_floor, 1e-300);
  const double shift = best;
  auto r = integrate([&](double t) { return std::exp(log_f(t) - shift); }, a, b, rel_tol, opts);
  if (!(r.value > 0.0)) throw NumericError("quadrature", "nonpositive log-space integral", best_t);
  return {std::log(r.value) + shift, r.error_estimate / r.value, r.evaluations + kSamples + 64};
}

/// Gauss-Legendre rule with n nodes mapped to [0,1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre_unit(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.weights[i] = 0.5 * w;
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace pbk::quad
