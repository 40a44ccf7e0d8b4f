#pragma once

/**
 * @file blowup.hpp
 * @brief Real blow-up of the (x, hbar) half-plane at (eps, 0).
 *
 * Charts, each mapped to (x, hbar) by the blow-down:
 *
 *     interior     (xi, hbar)  -> (eps + xi hbar, hbar)
 *     corner_plus  (x, eta)    -> (x, (x - eps) eta),   x >= eps
 *     corner_minus (x, eta)    -> (x, (eps - x) eta),   x <= eps
 *     polar        (r, theta)  -> (eps + r cos theta, r sin theta)
 *
 * The front face r = 0 collapses to (eps, 0). Chart transitions go through
 * the polar chart using the direction theta, so they stay exact on the
 * boundary faces.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pbk/error.hpp"

namespace pbk {

enum class Chart { interior, corner_plus, corner_minus, polar, direct };

inline std::string to_string(Chart c) {
  switch (c) {
    case Chart::interior: return "interior";
    case Chart::corner_plus: return "corner_plus";
    case Chart::corner_minus: return "corner_minus";
    case Chart::polar: return "polar";
    case Chart::direct: return "direct";
  }
  return "unknown";
}

inline Chart parse_chart(const std::string& s) {
  if (s == "interior") return Chart::interior;
  if (s == "corner_plus" || s == "corner+") return Chart::corner_plus;
  if (s == "corner_minus" || s == "corner-") return Chart::corner_minus;
  if (s == "polar") return Chart::polar;
  if (s == "direct") return Chart::direct;
  throw ConfigError("config: unknown chart '" + s + "'");
}

/// A point of the blow-up; `direct` means plain (x, hbar) coordinates.
struct BlowupPoint {
  Chart chart = Chart::interior;
  double a = 0.0;
  double b = 0.0;
  double eps = 0.0;

  void validate() const {
    constexpr double tol = 1e-14;
    switch (chart) {
      case Chart::interior:
        if (b < 0.0) throw DomainError("blowup: interior chart requires hbar >= 0");
        break;
      case Chart::corner_plus:
        if (a - eps < -tol || b < 0.0) throw DomainError("blowup: corner_plus requires x >= eps, eta >= 0");
        break;
      case Chart::corner_minus:
        if (eps - a < -tol || b < 0.0) throw DomainError("blowup: corner_minus requires x <= eps, eta >= 0");
        break;
      case Chart::polar:
        if (a < 0.0 || b < -tol || b > std::numbers::pi + tol) {
          throw DomainError("blowup: polar chart requires r >= 0 and theta in [0, pi]");
        }
        break;
      case Chart::direct:
        if (b < 0.0) throw DomainError("blowup: hbar must be >= 0");
        break;
    }
  }

  /// True on a boundary face (hbar = 0 after blow-down).
  bool on_boundary() const {
    switch (chart) {
      case Chart::interior: return b == 0.0;
      case Chart::corner_plus:
      case Chart::corner_minus: return b == 0.0 || a == eps;
      case Chart::polar: return a == 0.0 || b == 0.0 || b == std::numbers::pi;
      case Chart::direct: return b == 0.0;
    }
    return false;
  }
};

struct PlanePoint {
  double x = 0.0;
  double hbar = 0.0;
};

inline PlanePoint blow_down(const BlowupPoint& p) {
  p.validate();
  switch (p.chart) {
    case Chart::interior: return {p.eps + p.a * p.b, p.b};
    case Chart::corner_plus: return {p.a, (p.a - p.eps) * p.b};
    case Chart::corner_minus: return {p.a, (p.eps - p.a) * p.b};
    case Chart::polar: return {p.eps + p.a * std::cos(p.b), p.a * std::sin(p.b)};
    case Chart::direct: return {p.a, p.b};
  }
  return {};
}

/// Exact chart-to-polar formulas; valid on the boundary faces as well.
inline BlowupPoint to_polar(const BlowupPoint& p) {
  p.validate();
  BlowupPoint q{Chart::polar, 0.0, 0.0, p.eps};
  switch (p.chart) {
    case Chart::polar: return p;
    case Chart::interior:
      q.a = p.b * std::hypot(1.0, p.a);
      q.b = std::atan2(1.0, p.a);
      return q;
    case Chart::corner_plus:
      q.a = (p.a - p.eps) * std::hypot(1.0, p.b);
      q.b = std::atan2(p.b, 1.0);
      return q;
    case Chart::corner_minus:
      q.a = (p.eps - p.a) * std::hypot(1.0, p.b);
      q.b = std::atan2(p.b, -1.0);
      return q;
    case Chart::direct: {
      const double dx = p.a - p.eps;
      q.a = std::hypot(dx, p.b);
      q.b = q.a == 0.0 ? std::numbers::pi / 2 : std::atan2(p.b, dx);
      return q;
    }
  }
  return q;
}

/// Converts to the target chart. Throws DomainError when the target chart
/// does not contain the point (e.g. theta = 0 in the interior chart).
inline BlowupPoint change_chart(const BlowupPoint& p, Chart target) {
  const BlowupPoint q = to_polar(p);
  const double r = q.a, th = q.b, c = std::cos(th), s = std::sin(th);
  BlowupPoint out{target, 0.0, 0.0, p.eps};
  switch (target) {
    case Chart::polar: return q;
    case Chart::interior:
      if (!(th > 0.0 && th < std::numbers::pi)) {
        throw DomainError("blowup: point lies outside the interior chart");
      }
      out.a = c / s;
      out.b = r * s;
      return out;
    case Chart::corner_plus:
      if (!(th < std::numbers::pi / 2)) throw DomainError("blowup: point lies outside corner_plus");
      out.a = p.eps + r * c;
      out.b = s / c;
      return out;
    case Chart::corner_minus:
      if (!(th > std::numbers::pi / 2)) throw DomainError("blowup: point lies outside corner_minus");
      out.a = p.eps + r * c;
      out.b = -s / c;
      return out;
    case Chart::direct:
      out.a = p.eps + r * c;
      out.b = r * s;
      return out;
  }
  return out;
}

/// A function of (x, hbar) with optional values on the hbar = 0 faces of the
/// blow-up, for functions (such as e^{-(x-eps)^2/hbar^2}) whose plane formula
/// does not extend there.
struct LiftableFn {
  std::function<double(double x, double hbar)> f;
  std::function<double(const BlowupPoint&)> boundary{};
};

/// Value of f o blow_down at p, using the boundary extension on hbar = 0.
inline double lift(const LiftableFn& f, const BlowupPoint& p) {
  const PlanePoint z = blow_down(p);
  if (z.hbar > 0.0) return f.f(z.x, z.hbar);
  if (f.boundary) return f.boundary(p);
  double v = std::numeric_limits<double>::quiet_NaN();
  try {
    v = f.f(z.x, 0.0);
  } catch (const std::exception&) {
  }
  if (!std::isfinite(v)) {
    throw NumericError("blowup", "function undefined on the boundary face and no extension rule",
                       z.x);
  }
  return v;
}

struct ProbeLevel {
  double level = 0.0;
  double max_difference = 0.0;
  /// Stencils dropped because they left the domain of f.
  std::size_t skipped = 0;
};

struct ProbeReport {
  Chart chart = Chart::interior;
  int order = 2;
  std::vector<ProbeLevel> levels;
  std::vector<double> ratios;
  bool bounded = false;
};

struct ProbeOptions {
  /// Distance to the corner: hbar for the interior and direct charts,
  /// |x - eps| for the corner charts, r for the polar chart.
  std::vector<double> levels{0.1, 0.05, 0.025};
  /// Tangential sample range: xi in [-span, span] (interior), eta in [0, span]
  /// (corners), theta in [0, pi] (polar), x in eps +- span * level (direct).
  double span = 3.0;
  /// Fixed divided-difference step in the tangential coordinate.
  double step = 0.05;
  /// Step in x for the direct (unlifted) chart.
  double direct_step = 1e-3;
  double ratio_limit = 1.5;
};

/// Max over a boundary-adjacent tangential grid of |order-th divided difference|
/// at each level; "bounded" when every successive ratio is <= ratio_limit.
inline ProbeReport smoothness_probe(const LiftableFn& f, Chart chart, int order, double eps,
                                    const ProbeOptions& opts = {}) {
  if (order < 1 || order > 4) throw DomainError("smoothness_probe: order must be in [1, 4]");
  if (opts.levels.size() < 2) throw DomainError("smoothness_probe: needs >= 2 levels");
  ProbeReport rep;
  rep.chart = chart;
  rep.order = order;
  const double h = chart == Chart::direct ? opts.direct_step : opts.step;
  for (double level : opts.levels) {
    double lo = 0.0, hi = 0.0;
    switch (chart) {
      case Chart::interior: lo = -opts.span; hi = opts.span; break;
      case Chart::corner_plus:
      case Chart::corner_minus: lo = 0.5 * order * h; hi = opts.span; break;
      case Chart::polar: lo = 0.5 * order * h; hi = std::numbers::pi - 0.5 * order * h; break;
      case Chart::direct: lo = eps - opts.span * level; hi = eps + opts.span * level; break;
    }
    auto eval = [&](double s) {
      BlowupPoint p{chart, 0.0, 0.0, eps};
      switch (chart) {
        case Chart::interior: p.a = s; p.b = level; break;
        case Chart::corner_plus: p.a = eps + level; p.b = s; break;
        case Chart::corner_minus: p.a = eps - level; p.b = s; break;
        case Chart::polar: p.a = level; p.b = s; break;
        case Chart::direct: p.a = s; p.b = level; break;
      }
      return lift(f, p);
    };
    double m = 0.0;
    std::size_t skipped = 0;
    const int n = static_cast<int>(std::floor((hi - lo) / h + 1e-9));
    for (int i = 0; i <= n; ++i) {
      const double s = lo + i * h;
      double dd = 0.0, binom = 1.0;
      try {
        for (int j = 0; j <= order; ++j) {
          dd += ((j % 2) ? -binom : binom) * eval(s + (0.5 * order - j) * h);
          binom = binom * (order - j) / (j + 1);
        }
      } catch (const DomainError&) {
        ++skipped;  // stencil leaves the domain of f
        continue;
      }
      m = std::max(m, std::abs(dd) / std::pow(h, order));
    }
    if (skipped > static_cast<std::size_t>(n)) {
      throw DomainError("smoothness_probe: no stencil lies in the domain of f");
    }
    rep.levels.push_back({level, m, skipped});
  }
  rep.bounded = true;
  for (std::size_t i = 1; i < rep.levels.size(); ++i) {
    const double prev = rep.levels[i - 1].max_difference;
    const double cur = rep.levels[i].max_difference;
    const double ratio =
        prev > 0.0 ? cur / prev : (cur > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    rep.ratios.push_back(ratio);
    if (!(ratio <= opts.ratio_limit)) rep.bounded = false;
  }
  return rep;
}

}  // namespace pbk
