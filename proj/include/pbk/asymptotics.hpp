#pragma once

/**
 * @file asymptotics.hpp
 * @brief Euler-Maclaurin summation, the delta_0 / D operator calculus and
 *        incomplete Gaussian (Laplace) expansions with remainder bounds.
 *
 * Notation. Phi is the standard normal distribution function and
 *
 *     Z(x, h; a) = (1 / (sqrt(2 pi) h)) int_{-inf}^x e^{-t^2 / 2h^2} a(t) dt
 *                = int_{-inf}^{x/h} Phi'(s) a(h s) ds.
 *
 * With delta_0 a(t) = (a(t) - a(0)) / t and D a = (delta_0 a)', integration
 * by parts gives the finite expansion
 *
 *     Z = sum_{j<=N} h^{2j} D^j a(0) Phi(x/h)
 *       - sum_{j<=N} h^{2j+1} (delta_0 D^j a)(x) Phi'(x/h)
 *       + h^{2N+2} Z(x, h; D^{N+1} a).
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pbk/disc_pbk.hpp"
#include "pbk/error.hpp"
#include "pbk/legendre.hpp"
#include "pbk/quadrature.hpp"
#include "pbk/special.hpp"

namespace pbk::asym {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Bernoulli numbers

/// Exact Bernoulli number beta_j with beta_1 = -1/2, from the recurrence
/// sum_{i<=m} C(m+1, i) beta_i = 0.
inline Rational bernoulli(int j) {
  if (j < 0) throw DomainError("bernoulli: j must be >= 0");
  static std::mutex mu;
  static std::vector<Rational> table{Rational(1)};
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(table.size()) <= j) {
    const int m = static_cast<int>(table.size());
    Rational s = 0;
    boost::multiprecision::cpp_int binom = 1;  // C(m+1, i)
    for (int i = 0; i < m; ++i) {
      s += Rational(binom) * table[i];
      binom = binom * (m + 1 - i) / (i + 1);
    }
    table.push_back(-s / (m + 1));
  }
  return table[j];
}

inline double bernoulli_value(int j) { return static_cast<double>(bernoulli(j)); }

/// Bernoulli polynomial B_m(x) = sum_i C(m, i) beta_i x^{m-i}.
inline double bernoulli_polynomial(int m, double x) {
  double s = 0.0, binom = 1.0;
  for (int i = 0; i <= m; ++i) {
    s += binom * bernoulli_value(i) * std::pow(x, m - i);
    binom = binom * (m - i) / (i + 1);
  }
  return s;
}

/// sup over [0,1] of |B_m|, by dense sampling with a small safety margin.
inline double bernoulli_polynomial_sup(int m) {
  if (m == 0) return 1.0;
  double s = 0.0;
  for (int i = 0; i <= 4000; ++i) s = std::max(s, std::abs(bernoulli_polynomial(m, i / 4000.0)));
  return s * (1.0 + 1e-3);
}

// ---------------------------------------------------------------------------
// Finite differences

/// r-th derivative by central differences with step h, extrapolated over
/// h, h/2, h/4 (error O(h^6)).
inline double fd_derivative(const std::function<double(double)>& f, int r, double t, double h) {
  if (r == 0) return f(t);
  auto central = [&](double step) {
    double s = 0.0, binom = 1.0;
    for (int i = 0; i <= r; ++i) {
      s += ((i % 2) ? -binom : binom) * f(t + (0.5 * r - i) * step);
      binom = binom * (r - i) / (i + 1);
    }
    return s / std::pow(step, r);
  };
  const double d1 = central(h), d2 = central(0.5 * h), d4 = central(0.25 * h);
  return (64.0 * d4 - 20.0 * d2 + d1) / 45.0;
}

// ---------------------------------------------------------------------------
// SmoothFn

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
  bool contains(double t) const { return t >= lo && t <= hi; }
};

/// A function with derivatives up to a declared order. Optional global sup
/// bounds sup_R |f^(r)| allow certified remainder bounds; otherwise sups are
/// sampled on the working interval.
class SmoothFn {
 public:
  using Deriv = std::function<double(int, double)>;
  static constexpr int kUnlimited = 64;

  SmoothFn() = default;
  SmoothFn(Deriv d, int max_order, Interval working = {}, std::vector<double> sup_bounds = {})
      : d_(std::make_shared<Deriv>(std::move(d))),
        max_order_(max_order),
        working_(working),
        sup_(std::move(sup_bounds)) {}

  double operator()(double t) const { return derivative(0, t); }

  double derivative(int r, double t) const {
    if (r < 0 || r > max_order_) {
      std::ostringstream os;
      os << "derivative of order " << r << " exceeds the budget " << max_order_;
      throw NumericError("asymptotics", os.str(), t);
    }
    return (*d_)(r, t);
  }

  int max_order() const { return max_order_; }
  const Interval& working_interval() const { return working_; }
  bool has_sup_bounds() const { return !sup_.empty(); }
  const std::vector<double>& sup_bounds() const { return sup_; }

  /// Global bound when known, else a sampled sup of |f^(r)| on the working interval.
  double sup_abs(int r) const {
    if (has_sup_bounds() && r < static_cast<int>(sup_.size())) return sup_[r];
    double s = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double t = working_.lo + (working_.hi - working_.lo) * i / 400.0;
      s = std::max(s, std::abs(derivative(r, t)));
    }
    return s;
  }

  static SmoothFn constant(double c) {
    return SmoothFn([c](int r, double) { return r == 0 ? c : 0.0; }, kUnlimited, {},
                    std::vector<double>(kUnlimited + 1, 0.0));
  }

  /// sum_i coeffs[i] t^i. No global sup bounds unless constant.
  static SmoothFn polynomial(std::vector<double> coeffs, Interval working = {}) {
    auto d = [coeffs](int r, double t) {
      double s = 0.0;
      for (int i = static_cast<int>(coeffs.size()) - 1; i >= r; --i) {
        double falling = 1.0;
        for (int j = 0; j < r; ++j) falling *= (i - j);
        s = s * t + coeffs[i] * falling;
      }
      return s;
    };
    std::vector<double> sup;
    if (coeffs.size() <= 1) {
      sup.assign(kUnlimited + 1, 0.0);
      if (!coeffs.empty()) sup[0] = std::abs(coeffs[0]);
    }
    return SmoothFn(d, kUnlimited, working, sup);
  }

  struct Wave {
    double amplitude;
    double frequency;
    double phase;
  };

  /// sum amplitude cos(frequency t + phase), with global bounds sum |A| w^r.
  static SmoothFn trig_sum(std::vector<Wave> waves, Interval working = {}) {
    auto d = [waves](int r, double t) {
      double s = 0.0;
      for (const auto& w : waves) {
        // d^r/dt^r cos(wt + p) = w^r cos(wt + p + r pi/2)
        s += w.amplitude * std::pow(w.frequency, r) *
             std::cos(w.frequency * t + w.phase + r * std::numbers::pi / 2);
      }
      return s;
    };
    std::vector<double> sup(kUnlimited + 1, 0.0);
    for (int r = 0; r <= kUnlimited; ++r) {
      for (const auto& w : waves) sup[r] += std::abs(w.amplitude) * std::pow(std::abs(w.frequency), r);
    }
    return SmoothFn(d, kUnlimited, working, sup);
  }

  /// Derivatives by Richardson-extrapolated central differences; the step for
  /// order r is 2^{r-1} step, which keeps rounding in check up to order 8.
  static SmoothFn finite_difference(std::function<double(double)> f, int max_order, double step,
                                    Interval working = {}) {
    auto fp = std::make_shared<std::function<double(double)>>(std::move(f));
    auto d = [fp, step](int r, double t) {
      return fd_derivative(*fp, r, t, std::ldexp(step, std::max(r - 1, 0)));
    };
    return SmoothFn(d, max_order, working);
  }

  /// Chebyshev interpolant of f with `degree` + 1 nodes on the working
  /// interval; derivatives are those of the interpolant. Evaluation outside the
  /// interval throws DomainError.
  static SmoothFn chebyshev(const std::function<double(double)>& f, Interval working, int degree,
                            int max_order) {
    if (!(working.hi > working.lo)) throw DomainError("chebyshev: empty working interval");
    if (degree < 1 || max_order < 0) throw DomainError("chebyshev: degree must be >= 1");
    const int n = degree + 1;
    const double mid = 0.5 * (working.lo + working.hi), half = 0.5 * (working.hi - working.lo);
    std::vector<double> fx(n);
    for (int k = 0; k < n; ++k) fx[k] = f(mid + half * std::cos(std::numbers::pi * (k + 0.5) / n));
    // coeffs[r] holds the series of the r-th derivative in the variable s = (t - mid)/half,
    // with the first coefficient halved as usual.
    auto coeffs = std::make_shared<std::vector<std::vector<double>>>();
    std::vector<double> c(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += fx[k] * std::cos(std::numbers::pi * j * (k + 0.5) / n);
      c[j] = 2.0 * v / n;
    }
    coeffs->push_back(c);
    for (int r = 1; r <= max_order; ++r) {
      const auto& a = coeffs->back();
      std::vector<double> b(n + 1, 0.0);
      for (int k = n - 1; k >= 1; --k) b[k - 1] = b[k + 1] + 2.0 * k * a[k];
      b.resize(n);
      coeffs->push_back(std::move(b));
    }
    auto d = [coeffs, mid, half, working](int r, double t) {
      constexpr double tol = 1e-12;
      if (t < working.lo - tol * half || t > working.hi + tol * half) {
        throw DomainError("chebyshev: evaluation outside the working interval");
      }
      const auto& a = (*coeffs)[static_cast<std::size_t>(r)];
      const double s = std::clamp((t - mid) / half, -1.0, 1.0);
      double b1 = 0.0, b2 = 0.0;
      for (std::size_t k = a.size(); k-- > 1;) {
        const double b0 = 2.0 * s * b1 - b2 + a[k];
        b2 = b1;
        b1 = b0;
      }
      return (s * b1 - b2 + 0.5 * a[0]) / std::pow(half, r);
    };
    return SmoothFn(d, max_order, working);
  }

  /// t -> f(s t)
  SmoothFn scaled_argument(double s) const {
    if (!(s > 0.0)) throw DomainError("scaled_argument: scale must be positive");
    auto inner = d_;
    auto d = [inner, s](int r, double t) { return std::pow(s, r) * (*inner)(r, s * t); };
    std::vector<double> sup;
    for (std::size_t r = 0; r < sup_.size(); ++r) sup.push_back(sup_[r] * std::pow(s, r));
    return SmoothFn(d, max_order_, {working_.lo / s, working_.hi / s}, sup);
  }

  SmoothFn scaled_value(double c) const {
    auto inner = d_;
    auto d = [inner, c](int r, double t) { return c * (*inner)(r, t); };
    std::vector<double> sup;
    for (double b : sup_) sup.push_back(std::abs(c) * b);
    return SmoothFn(d, max_order_, working_, sup);
  }

  /// Leibniz product.
  friend SmoothFn operator*(const SmoothFn& f, const SmoothFn& g) {
    auto a = f.d_, b = g.d_;
    auto d = [a, b](int r, double t) {
      double s = 0.0, binom = 1.0;
      for (int i = 0; i <= r; ++i) {
        s += binom * (*a)(i, t) * (*b)(r - i, t);
        binom = binom * (r - i) / (i + 1);
      }
      return s;
    };
    const int order = std::min(f.max_order_, g.max_order_);
    std::vector<double> sup;
    if (f.has_sup_bounds() && g.has_sup_bounds()) {
      const int top = std::min<int>({order, static_cast<int>(f.sup_.size()) - 1,
                                     static_cast<int>(g.sup_.size()) - 1});
      for (int r = 0; r <= top; ++r) {
        double s = 0.0, binom = 1.0;
        for (int i = 0; i <= r; ++i) {
          s += binom * f.sup_[i] * g.sup_[r - i];
          binom = binom * (r - i) / (i + 1);
        }
        sup.push_back(s);
      }
    }
    Interval w{std::max(f.working_.lo, g.working_.lo), std::min(f.working_.hi, g.working_.hi)};
    return SmoothFn(d, order, w, sup);
  }

  friend SmoothFn operator+(const SmoothFn& f, const SmoothFn& g) {
    auto a = f.d_, b = g.d_;
    auto d = [a, b](int r, double t) { return (*a)(r, t) + (*b)(r, t); };
    std::vector<double> sup;
    if (f.has_sup_bounds() && g.has_sup_bounds()) {
      for (std::size_t r = 0; r < std::min(f.sup_.size(), g.sup_.size()); ++r) {
        sup.push_back(f.sup_[r] + g.sup_[r]);
      }
    }
    Interval w{std::max(f.working_.lo, g.working_.lo), std::min(f.working_.hi, g.working_.hi)};
    return SmoothFn(d, std::min(f.max_order_, g.max_order_), w, sup);
  }

  SmoothFn power(int j) const {
    if (j < 0) throw DomainError("SmoothFn::power: exponent must be >= 0");
    SmoothFn out = constant(1.0);
    out.working_ = working_;
    for (int i = 0; i < j; ++i) out = out * *this;
    return out;
  }

 private:
  std::shared_ptr<Deriv> d_;
  int max_order_ = 0;
  Interval working_{};
  std::vector<double> sup_;
};

// ---------------------------------------------------------------------------
// delta_0 and D

namespace detail {

inline constexpr double kRecursionSwitch = 2.0;

inline const quad::GaussRule& unit_rule() {
  static const quad::GaussRule rule = quad::gauss_legendre_unit(16);
  return rule;
}

}  // namespace detail

/// delta_0 f(t) = (f(t) - f(0)) / t. Derivatives use
/// (delta_0 f)^(n)(t) = int_0^1 lambda^n f^(n+1)(lambda t) d lambda for
/// |t| < 2 and the recursion t g^(n) = f^(n)(t) - n g^(n-1)(t) beyond.
inline SmoothFn delta0(const SmoothFn& f) {
  if (f.max_order() < 1) throw NumericError("asymptotics", "delta0 needs one derivative");
  auto d = [f](int n, double t) {
    if (t == 0.0) return f.derivative(n + 1, 0.0) / (n + 1);
    if (std::abs(t) < detail::kRecursionSwitch) {
      const auto& rule = detail::unit_rule();
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double l = rule.nodes[i];
        s += rule.weights[i] * std::pow(l, n) * f.derivative(n + 1, l * t);
      }
      return s;
    }
    double g = (f(t) - f(0.0)) / t;
    for (int i = 1; i <= n; ++i) g = (f.derivative(i, t) - i * g) / t;
    return g;
  };
  std::vector<double> sup;
  const auto& fs = f.sup_bounds();
  for (std::size_t n = 0; n + 1 < fs.size() && static_cast<int>(n) < f.max_order(); ++n) {
    sup.push_back(fs[n + 1] / (n + 1));
  }
  Interval w = f.working_interval();
  w.lo = std::min(w.lo, 0.0);
  w.hi = std::max(w.hi, 0.0);
  return SmoothFn(d, f.max_order() - 1, w, sup);
}

/// D f = (delta_0 f)'.
inline SmoothFn D_op(const SmoothFn& f) {
  if (f.max_order() < 2) {
    throw NumericError("asymptotics", "insufficient derivative budget for D (needs 2)");
  }
  const SmoothFn g = delta0(f);
  auto d = [g](int n, double t) { return g.derivative(n + 1, t); };
  std::vector<double> sup;
  const auto& gs = g.sup_bounds();
  for (std::size_t n = 0; n + 1 < gs.size(); ++n) sup.push_back(gs[n + 1]);
  return SmoothFn(d, f.max_order() - 2, g.working_interval(), sup);
}

// ---------------------------------------------------------------------------
// Expansions

struct Term {
  int power = 0;
  double value = 0.0;
};

/// sum_i value_i h^{power_i} at a fixed h, with a bound on what is left out.
/// `certified` is false when a sup entering the bound was sampled rather than known.
struct Expansion {
  double hbar = 0.0;
  std::vector<Term> terms;
  double remainder_bound = 0.0;
  bool certified = true;
  /// Labelled pieces as reported in coefficient tables (e.g. "Phi:2").
  std::vector<std::pair<std::string, Term>> components;

  void add(int power, double value) {
    auto it = std::lower_bound(terms.begin(), terms.end(), power,
                               [](const Term& t, int p) { return t.power < p; });
    if (it != terms.end() && it->power == power) {
      it->value += value;
    } else {
      terms.insert(it, Term{power, value});
    }
  }

  void add_component(const std::string& label, int power, double value) {
    components.emplace_back(label, Term{power, value});
    add(power, value);
  }

  double evaluate() const { return evaluate_up_to(std::numeric_limits<int>::max()); }

  double evaluate_up_to(int max_power) const {
    double s = 0.0;
    for (const auto& t : terms) {
      if (t.power <= max_power) s += t.value * std::pow(hbar, t.power);
    }
    return s;
  }

  void validate() const {
    for (std::size_t i = 1; i < terms.size(); ++i) {
      if (!(terms[i].power > terms[i - 1].power)) {
        throw NumericError("asymptotics", "expansion powers are not strictly increasing");
      }
    }
    if (!(remainder_bound >= 0.0)) throw NumericError("asymptotics", "negative remainder bound");
  }
};

// ---------------------------------------------------------------------------
// Euler-Maclaurin

struct EmResult {
  double value = 0.0;
  double integral = 0.0;
  double residual_bound = 0.0;
};

/// sum_{n>=a} p(n) ~ int_a^inf p + p(a)/2 - sum_{j=1}^{m-1} beta_{j+1}/(j+1)! p^(j)(a),
/// with |residual| <= sup|B_m| / m! int_a^inf |p^(m)|.
inline EmResult euler_maclaurin_tail(const SmoothFn& p, long a, int m, double rel_tol = 1e-13) {
  if (m < 1) throw DomainError("euler_maclaurin_tail: m must be >= 1");
  if (p.max_order() < m) {
    throw NumericError("asymptotics", "euler_maclaurin_tail: derivative budget below m");
  }
  const double a0 = static_cast<double>(a);
  EmResult r;
  r.integral = quad::integrate_decaying([&](double t) { return p(t); }, a0, rel_tol).value;
  r.value = r.integral + 0.5 * p(a0);
  double fact = 1.0;
  for (int j = 1; j < m; ++j) {
    fact *= (j + 1);
    const double b = bernoulli_value(j + 1);
    if (b != 0.0) r.value -= b / fact * p.derivative(j, a0);
  }
  double mfact = std::tgamma(m + 1.0);
  const double tail =
      quad::integrate_decaying([&](double t) { return std::abs(p.derivative(m, t)); }, a0, 1e-6)
          .value;
  r.residual_bound = bernoulli_polynomial_sup(m) / mfact * tail;
  return r;
}

/// Finite-range variant sum_{n=a}^{b} p(n); exact for polynomials of degree < m.
inline EmResult euler_maclaurin_sum(const SmoothFn& p, long a, long b, int m,
                                    double rel_tol = 1e-13) {
  if (m < 1) throw DomainError("euler_maclaurin_sum: m must be >= 1");
  if (b < a) throw DomainError("euler_maclaurin_sum: requires a <= b");
  if (p.max_order() < m) {
    throw NumericError("asymptotics", "euler_maclaurin_sum: derivative budget below m");
  }
  const double a0 = static_cast<double>(a), b0 = static_cast<double>(b);
  EmResult r;
  quad::Options opts;
  opts.abs_floor = 0.0;
  if (b > a) r.integral = quad::integrate([&](double t) { return p(t); }, a0, b0, rel_tol, opts).value;
  r.value = r.integral + 0.5 * (p(a0) + p(b0));
  double fact = 1.0;
  for (int j = 1; j < m; ++j) {
    fact *= (j + 1);
    const double bj = bernoulli_value(j + 1);
    if (bj != 0.0) r.value += bj / fact * (p.derivative(j, b0) - p.derivative(j, a0));
  }
  if (b > a) {
    const double var =
        quad::integrate([&](double t) { return std::abs(p.derivative(m, t)); }, a0, b0, 1e-6).value;
    r.residual_bound = bernoulli_polynomial_sup(m) / std::tgamma(m + 1.0) * var;
  }
  return r;
}

/// The scalar amplitude sqrt(u_xx(nu) / pi), the Laplace value of G_{n,k} / sqrt(k).
inline std::function<double(double)> laplace_amplitude(const DualPotential& d) {
  return [d](double nu) { return std::sqrt(d.u_xx(nu) / std::numbers::pi); };
}

/// h sum_n e^{-2k U(n/k, x)} amp(n/k) over the configured n-range, h = k^{-1/2}.
inline double em_direct_sum(const DualPotential& d, const PbkConfig& cfg, double x,
                            const std::function<double(double)>& amp) {
  const double k = cfg.k, t = d.t_of_x(x);
  double s = 0.0;
  for (long n = cfg.n_lo(); n <= cfg.n_hi(); ++n) {
    const double nu = n / k;
    s += std::exp(-2.0 * k * exponent_U_with(d, nu, d.u(nu), t)) * amp(nu);
  }
  return s / std::sqrt(k);
}

inline constexpr int kEmMaxDerivative = 8;

/// Euler-Maclaurin expansion of em_direct_sum in the variable s = (x - nu)/h,
/// q(s) = e^{-2k U(x - h s, x)} amp(x - h s):
///
///     h sum = int q ds + sum_{j<m} A_j h^{j+1},
///     A_0 = q(xi)/2,  A_j = (-1)^{j+1} beta_{j+1} / (j+1)! q^(j)(xi),   xi = (x - n_lo/k)/h,
///
/// plus the mirror corrections at the upper end of the range. Derivatives of q
/// are finite differences with step h^{1/2} 1e-2 per order.
inline Expansion em_pdf_sum(const DualPotential& d, const PbkConfig& cfg, double x, int m,
                            std::function<double(double)> amp = {}) {
  if (m < 1) throw DomainError("em_pdf_sum: m must be >= 1");
  if (m > kEmMaxDerivative) {
    std::ostringstream os;
    os << "em_pdf_sum: m=" << m << " exceeds the finite-difference derivative order "
       << kEmMaxDerivative;
    throw NumericError("asymptotics", os.str());
  }
  if (!(x > 0.0 && x < cfg.eps_prime)) throw DomainError("em_pdf_sum: requires 0 < x < eps_prime");
  if (!amp) amp = laplace_amplitude(d);
  const double k = cfg.k, h = 1.0 / std::sqrt(k);
  const double t = d.t_of_x(x);
  const double nu_lo = cfg.n_lo() / k, nu_hi = cfg.n_hi() / k;
  auto q = [&](double s) {
    const double nu = x - h * s;
    if (nu < 0.0 || nu > d.x_max()) return 0.0;
    return std::exp(-2.0 * k * exponent_U_with(d, nu, d.u(nu), t)) * amp(nu);
  };
  const double xi = (x - nu_lo) / h, s_hi = (x - nu_hi) / h;
  const SmoothFn qf = SmoothFn::finite_difference(q, kEmMaxDerivative, 1e-2 * std::sqrt(h));

  Expansion e;
  e.hbar = h;
  e.certified = false;
  quad::Options opts;
  opts.abs_floor = 0.0;
  for (double s : {-6.0, -3.0, 0.0, 3.0}) {  // q peaks at s = 0 with unit width
    if (s > s_hi && s < xi) opts.breakpoints.push_back(s);
  }
  const double integral = quad::integrate(q, s_hi, xi, 1e-13, opts).value;
  e.add_component("integral", 0, integral);
  e.add_component("A0", 1, 0.5 * (q(xi) + q(s_hi)));
  double fact = 1.0;
  for (int j = 1; j < m; ++j) {
    fact *= (j + 1);
    const double b = bernoulli_value(j + 1);
    if (b == 0.0) continue;
    // d/dn = -h d/ds, so p^(j)(n) = (-h)^j q^(j)(s).
    const double sign = (j % 2) ? -1.0 : 1.0;
    const double lower = -b / fact * sign * qf.derivative(j, xi);
    const double upper = b / fact * sign * qf.derivative(j, s_hi);
    e.add_component("A" + std::to_string(j), j + 1, lower + upper);
  }
  quad::Options vopts = opts;
  vopts.abs_floor = 1e-15;
  vopts.max_evaluations = 200'000;
  double var = 0.0;
  try {
    var = quad::integrate([&](double s) { return std::abs(qf.derivative(m, s)); }, s_hi, xi, 1e-4,
                          vopts)
              .value;
  } catch (const quad::QuadratureError& err) {
    var = err.partial().value + err.partial().error_estimate;
  }
  e.remainder_bound = std::pow(h, m) * bernoulli_polynomial_sup(m) / std::tgamma(m + 1.0) * var;
  return e;
}

// ---------------------------------------------------------------------------
// Laplace expansions

/// Z(x, h; f) by the finite expansion in the file comment with N+1 terms each
/// of the Phi and Phi' series. The remainder bound is
/// h^{2N+2} Phi(x/h) sup|f^(2N+2)| / (2^{N+1} (N+1)!).
inline Expansion incomplete_gaussian(double x, double hbar, const SmoothFn& f, int N) {
  if (N < 0) throw DomainError("incomplete_gaussian: N must be >= 0");
  if (!(hbar > 0.0)) throw DomainError("incomplete_gaussian: hbar must be > 0");
  if (f.max_order() < 2 * N + 2) {
    std::ostringstream os;
    os << "incomplete_gaussian: derivative budget " << f.max_order() << " below 2N+2 = "
       << 2 * N + 2;
    throw NumericError("asymptotics", os.str());
  }
  const double y = x / hbar;
  const double Phi = special::normal_cdf(y), dPhi = special::normal_pdf(y);
  Expansion e;
  e.hbar = hbar;
  SmoothFn g = f;
  for (int j = 0; j <= N; ++j) {
    e.add_component("Phi:" + std::to_string(2 * j), 2 * j, g(0.0) * Phi);
    e.add_component("dPhi:" + std::to_string(2 * j + 1), 2 * j + 1, -delta0(g)(x) * dPhi);
    if (j < N) g = D_op(g);
  }
  double denom = std::pow(2.0, N + 1) * std::tgamma(N + 2.0);
  e.certified = f.has_sup_bounds() && static_cast<int>(f.sup_bounds().size()) > 2 * N + 2;
  e.remainder_bound = std::pow(hbar, 2 * N + 2) * Phi * f.sup_abs(2 * N + 2) / denom;
  return e;
}

/// Z(x, h; f) by direct quadrature in s = t/h.
inline double incomplete_gaussian_quadrature(double x, double hbar, const SmoothFn& f,
                                             double rel_tol = 1e-13) {
  const double y = x / hbar;
  const double lo = std::min(-40.0, y - 1.0);
  quad::Options opts;
  opts.abs_floor = 1e-18;
  for (double b : {-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0}) {
    if (b > lo && b < y) opts.breakpoints.push_back(b);
  }
  return quad::integrate([&](double s) { return special::normal_pdf(s) * f(hbar * s); }, lo, y,
                         rel_tol, opts)
      .value;
}

/// Expansion of F(x, h) = (1/(sqrt(2 pi) h)) int_{-inf}^x e^{-f(t)/h^2} alpha(t) dt with
/// f(t) = c t^2/2 + q(t), from the Taylor expansion of lambda -> F with f_lambda = c t^2/2 + lambda q:
///
///     F ~ sum_{j<=p} (-1)^j h^{-2j} / (j! sqrt c) Z(sqrt(c) x, h; (q^j alpha)(. / sqrt c)).
///
/// Each Z uses N_j = ceil((p + 2j - 1)/2) so every piece is accurate to h^{p+1}.
/// q must vanish to third order at 0 and f >= c t^2/4 on the working interval of alpha.
inline Expansion general_exponent(double x, double hbar, double c, const SmoothFn& q,
                                  const SmoothFn& alpha, int p) {
  if (!(c > 0.0)) throw DomainError("general_exponent: c must be > 0");
  if (p < 0) throw DomainError("general_exponent: p must be >= 0");
  for (int r = 0; r <= 2; ++r) {
    if (std::abs(q.derivative(r, 0.0)) >= 1e-10) {
      std::ostringstream os;
      os << "general_exponent: q must vanish to order 3 at 0 (q^(" << r
         << ")(0) = " << q.derivative(r, 0.0) << ")";
      throw NumericError("asymptotics", os.str(), 0.0);
    }
  }
  const Interval w = alpha.working_interval();
  double Q = std::abs(q.derivative(3, 0.0)) / 6.0;
  constexpr int kGrid = 2000;
  for (int i = 0; i <= kGrid; ++i) {
    const double t = w.lo + (w.hi - w.lo) * i / kGrid;
    const double f = 0.5 * c * t * t + q(t);
    if (f < 0.25 * c * t * t - 1e-14) {
      std::ostringstream os;
      os << "general_exponent: domination f >= c t^2/4 fails";
      throw NumericError("asymptotics", os.str(), t);
    }
    if (std::abs(t) > 1e-3) Q = std::max(Q, std::abs(q(t)) / std::pow(std::abs(t), 3));
  }
  const double A = alpha.sup_abs(0);
  const double sc = std::sqrt(c);

  Expansion e;
  e.hbar = hbar;
  e.certified = false;
  double rem = 0.0;
  double jfact = 1.0;
  for (int j = 0; j <= p; ++j) {
    if (j) jfact *= j;
    const int Nj = std::max(0, (p + 2 * j) / 2);  // ceil((p + 2j - 1)/2)
    const SmoothFn g = (q.power(j) * alpha).scaled_argument(1.0 / sc);
    const Expansion z = incomplete_gaussian(sc * x, hbar, g, Nj);
    const double pref = ((j % 2) ? -1.0 : 1.0) / (jfact * sc);
    for (const auto& [label, term] : z.components) {
      e.add_component("H" + std::to_string(j) + ":" + label, term.power - 2 * j, pref * term.value);
    }
    rem += std::abs(pref) * std::pow(hbar, -2 * j) * z.remainder_bound;
  }
  // Taylor remainder sup |H^(p+1)| / (p+1)! with |q| <= Q |t|^3 and f_lambda >= c t^2/4.
  const double n = 3.0 * p + 4.0;
  const double taylor = std::pow(Q, p + 1) * A * std::pow(hbar, p + 1) *
                        std::pow(4.0 / c, 0.5 * n) * std::tgamma(0.5 * n) /
                        (std::sqrt(2.0 * std::numbers::pi) * std::tgamma(p + 2.0));
  e.remainder_bound = rem + taylor;
  return e;
}

/// F(x, h) of general_exponent by direct quadrature over the working interval of alpha.
inline double general_exponent_quadrature(double x, double hbar, double c, const SmoothFn& q,
                                          const SmoothFn& alpha, double rel_tol = 1e-12) {
  const Interval w = alpha.working_interval();
  const double hi = std::min(x, w.hi);
  if (!(hi > w.lo)) return 0.0;
  quad::Options opts;
  opts.abs_floor = 1e-18;
  const double s = hbar / std::sqrt(c);
  for (double b : {-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0}) {
    if (b * s > w.lo && b * s < hi) opts.breakpoints.push_back(b * s);
  }
  const double v = quad::integrate(
                       [&](double t) {
                         return std::exp(-(0.5 * c * t * t + q(t)) / (hbar * hbar)) * alpha(t);
                       },
                       w.lo, hi, rel_tol, opts)
                       .value;
  return v / (std::sqrt(2.0 * std::numbers::pi) * hbar);
}

/// Leading error-function law Phi(sqrt(2 u_xx(eps)) (x - eps) sqrt k).
inline double pdf_leading(const DualPotential& d, double eps, int k, double x) {
  if (!(eps > 0.0)) throw DomainError("pdf_leading: eps must be > 0");
  if (!(x > 0.0 && x < d.a())) throw DomainError("pdf_leading: x must lie in (0, a)");
  return special::normal_cdf(std::sqrt(2.0 * d.u_xx(eps)) * (x - eps) * std::sqrt(double(k)));
}

}  // namespace pbk::asym
