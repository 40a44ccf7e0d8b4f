#pragma once

/**
 * @file disc_pbk.hpp
 * @brief Local partial Bergman kernel on the disc.
 *
 * With nu = n/k the local kernel is the finite sum
 *
 *     A(x, x', dtheta) = sum_n G_{n,k} e^{-k (U(nu,x) + U(nu,x'))} e^{i n dtheta},
 *     1 / G_{n,k}      = int chi(x) e^{-2k U(nu,x)} dx,
 *
 * over ceil(eps k) <= n <= floor(eps' k), or up to floor(sigma k) when
 * `include_upper` is set. Its diagonal is the local density k^{-n} rho(x).
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pbk/error.hpp"
#include "pbk/legendre.hpp"
#include "pbk/quadrature.hpp"

namespace pbk {

enum class Route { oracle, local_kernel, asymptotic, model };

inline std::string to_string(Route r) {
  switch (r) {
    case Route::oracle: return "oracle";
    case Route::local_kernel: return "local";
    case Route::asymptotic: return "asymptotic";
    case Route::model: return "model";
  }
  return "unknown";
}

inline Route parse_route(const std::string& s) {
  if (s == "oracle") return Route::oracle;
  if (s == "local" || s == "local_kernel") return Route::local_kernel;
  if (s == "asymptotic") return Route::asymptotic;
  if (s == "model") return Route::model;
  throw ConfigError("config: unknown route '" + s + "'");
}

/// A density sampled on an increasing grid. `log_value` is filled when the
/// producing route works in log space, so callers can read deep-forbidden values.
struct DensityProfile {
  int k = 0;
  Route route = Route::oracle;
  std::vector<double> x;
  std::vector<double> value;
  std::vector<double> log_value;

  std::size_t size() const { return x.size(); }

  void validate() const {
    if (value.size() != x.size()) throw DomainError("profile: x and value sizes differ");
    if (!log_value.empty() && log_value.size() != x.size()) {
      throw DomainError("profile: log_value size differs from x");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i && !(x[i] > x[i - 1])) throw DomainError("profile: x must be strictly increasing");
      if (!(value[i] >= 0.0)) throw DomainError("profile: values must be >= 0");
    }
  }
};

/// C-infinity plateau: 1 on [0, plateau_end], 0 from support_end on, with the
/// smoothstep S(y) = f(y) / (f(y) + f(1-y)), f(s) = e^{-1/s}, in between.
struct CutoffChi {
  double plateau_end = 0.8;
  double support_end = 0.9;

  double operator()(double x) const {
    if (x <= plateau_end) return 1.0;
    if (x >= support_end) return 0.0;
    const double y = (support_end - x) / (support_end - plateau_end);
    const double fy = std::exp(-1.0 / y);
    const double fz = std::exp(-1.0 / (1.0 - y));
    return fy / (fy + fz);
  }

  double log_value(double x) const {
    if (x <= plateau_end) return 0.0;
    if (x >= support_end) return -std::numeric_limits<double>::infinity();
    const double y = (support_end - x) / (support_end - plateau_end);
    // log f(y) - log(f(y) + f(1-y)), arranged so that neither exponential underflows.
    const double ly = -1.0 / y, lz = -1.0 / (1.0 - y);
    const double m = std::max(ly, lz);
    return ly - (m + std::log(std::exp(ly - m) + std::exp(lz - m)));
  }
};

struct PbkConfig {
  int k = 100;
  double epsilon = 0.25;
  double sigma = 0.8;
  double eps_prime = 0.525;
  CutoffChi chi{};
  bool include_upper = true;
  double rel_tol = 1e-10;

  /// Fills the defaults sigma = 0.8 a, eps' = (eps + sigma)/2 and the cutoff
  /// support end (sigma + a)/2, then validates.
  static PbkConfig make(double a, int k, double epsilon, std::optional<double> sigma = {},
                        std::optional<double> eps_prime = {}, bool include_upper = true) {
    PbkConfig c;
    c.k = k;
    c.epsilon = epsilon;
    c.sigma = sigma.value_or(0.8 * a);
    c.eps_prime = eps_prime.value_or(0.5 * (epsilon + c.sigma));
    c.chi = CutoffChi{c.sigma, 0.5 * (c.sigma + a)};
    c.include_upper = include_upper;
    c.validate(a);
    return c;
  }

  void validate(double a) const {
    if (k < 1) throw ConfigError("config: k must be >= 1");
    if (!(epsilon >= 0.0)) throw ConfigError("config: eps must be >= 0");
    if (!(epsilon < sigma)) throw ConfigError("config: eps must be < sigma");
    if (!(epsilon < eps_prime && eps_prime <= sigma)) {
      throw ConfigError("config: eps_prime must lie in (eps, sigma]");
    }
    if (!(sigma < a)) throw ConfigError("config: sigma must be < a");
    if (!(chi.plateau_end == sigma && chi.support_end > sigma && chi.support_end < a)) {
      throw ConfigError("config: cutoff must have plateau end sigma and support end in (sigma, a)");
    }
    if (!(rel_tol > 0.0)) throw ConfigError("config: rel_tol must be > 0");
  }

  long n_lo() const { return static_cast<long>(std::ceil(epsilon * k - 1e-9)); }
  long n_hi() const {
    const double top = include_upper ? sigma : eps_prime;
    return static_cast<long>(std::floor(top * k + 1e-9));
  }
};

inline double cutoff_chi(const PbkConfig& cfg, double x) { return cfg.chi(x); }

struct NormalizationEntry {
  long n = 0;
  double nu = 0.0;
  double u_nu = 0.0;
  double log_G = 0.0;
  double G() const { return std::exp(log_G); }
};

namespace detail {

// log(1/G) for one degree; plain quadrature below k = 200, log space from there.
inline double log_inverse_G(const DualPotential& d, const PbkConfig& cfg, double nu,
                            double u_nu, double rel_tol) {
  const double k = cfg.k;
  const double lo = d.x_floor();
  const double hi = cfg.chi.support_end;
  quad::Options opts;
  opts.abs_floor = 0.0;
  const double width = nu > 0.0 ? 1.0 / std::sqrt(2.0 * k * d.u_xx(nu)) : 1.0 / k;
  for (double j : {-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0}) {
    const double b = nu + j * width;
    if (b > lo && b < hi) opts.breakpoints.push_back(b);
  }
  if (cfg.chi.plateau_end > lo && cfg.chi.plateau_end < hi) {
    opts.breakpoints.push_back(cfg.chi.plateau_end);
  }
  auto exponent = [&](double x) {
    return -2.0 * k * exponent_U_with(d, nu, u_nu, d.t_of_x(x));
  };
  if (cfg.k >= 200) {
    auto r = quad::log_integrate(
        [&](double x) { return cfg.chi.log_value(x) + exponent(x); }, lo, hi, rel_tol, opts);
    return r.log_value;
  }
  auto r = quad::integrate([&](double x) { return cfg.chi(x) * std::exp(exponent(x)); }, lo, hi,
                           rel_tol, opts);
  if (!(r.value > 0.0)) throw NumericError("disc_pbk", "non-positive normalization integral", nu);
  return std::log(r.value);
}

}  // namespace detail

/// The local kernel with its normalization table. The table is built once in
/// the constructor; evaluation is const and safe to call concurrently.
class LocalKernel {
 public:
  LocalKernel(DualPotential d, PbkConfig cfg) : d_(std::move(d)), cfg_(cfg) {
    cfg_.validate(d_.a());
    for (long n = cfg_.n_lo(); n <= cfg_.n_hi(); ++n) {
      NormalizationEntry e;
      e.n = n;
      e.nu = static_cast<double>(n) / cfg_.k;
      e.u_nu = d_.u(e.nu);
      try {
        e.log_G = -detail::log_inverse_G(d_, cfg_, e.nu, e.u_nu, cfg_.rel_tol);
      } catch (const NumericError& err) {
        std::ostringstream os;
        os << "normalization failed for n=" << n << ": " << err.what();
        throw NumericError("disc_pbk", os.str(), e.nu);
      }
      table_.push_back(e);
    }
  }

  const DualPotential& dual() const { return d_; }
  const PbkConfig& config() const { return cfg_; }
  const std::vector<NormalizationEntry>& table() const { return table_; }

  double log_pdf(double x) const {
    const double t = d_.t_of_x(x);
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(table_.size());
    for (const auto& e : table_) {
      terms.push_back(e.log_G - 2.0 * cfg_.k * exponent_U_with(d_, e.nu, e.u_nu, t));
      m = std::max(m, terms.back());
    }
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : terms) s += std::exp(v - m);
    return m + std::log(s);
  }

  double pdf(double x) const {
    const double t = d_.t_of_x(x);
    double s = 0.0;
    for (const auto& e : table_) {
      s += std::exp(e.log_G - 2.0 * cfg_.k * exponent_U_with(d_, e.nu, e.u_nu, t));
    }
    return s;
  }

  /// |A(x, x', dtheta)|.
  double offdiag(double x, double xp, double dtheta) const {
    const double t = d_.t_of_x(x), tp = d_.t_of_x(xp);
    std::vector<double> ex;
    ex.reserve(table_.size());
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& e : table_) {
      ex.push_back(e.log_G - cfg_.k * (exponent_U_with(d_, e.nu, e.u_nu, t) +
                                       exponent_U_with(d_, e.nu, e.u_nu, tp)));
      m = std::max(m, ex.back());
    }
    if (!std::isfinite(m)) return 0.0;
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < table_.size(); ++i) {
      s += std::polar(std::exp(ex[i] - m), static_cast<double>(table_[i].n) * dtheta);
    }
    return std::abs(s) * std::exp(m);
  }

  DensityProfile profile(std::span<const double> xs) const {
    DensityProfile p;
    p.k = cfg_.k;
    p.route = Route::local_kernel;
    p.x.assign(xs.begin(), xs.end());
    for (double x : xs) {
      p.log_value.push_back(log_pdf(x));
      p.value.push_back(std::exp(p.log_value.back()));
    }
    return p;
  }

 private:
  DualPotential d_;
  PbkConfig cfg_;
  std::vector<NormalizationEntry> table_;
};

inline std::map<long, double> normalization_constants(const DualPotential& d,
                                                      const PbkConfig& cfg) {
  LocalKernel lk(d, cfg);
  std::map<long, double> out;
  for (const auto& e : lk.table()) out.emplace(e.n, e.G());
  return out;
}

/// One-shot evaluation; builds the normalization table, so prefer LocalKernel for grids.
inline double pdf_local(const DualPotential& d, const PbkConfig& cfg, double x) {
  return LocalKernel(d, cfg).pdf(x);
}

inline double kernel_offdiag(const DualPotential& d, const PbkConfig& cfg, double x, double xp,
                             double dtheta) {
  return LocalKernel(d, cfg).offdiag(x, xp, dtheta);
}

/// (x, hbar) -> k^{-1} pdf_local(x) with k = hbar^{-2}, which must be an
/// integer. Kernels are built on first use for each k and cached.
class DensitySurface {
 public:
  DensitySurface(DualPotential d, double epsilon, std::optional<double> sigma = {})
      : d_(std::move(d)), epsilon_(epsilon), sigma_(sigma), cache_(std::make_shared<Cache>()) {}

  double operator()(double x, double hbar) const {
    const double kf = 1.0 / (hbar * hbar);
    const long k = std::lround(kf);
    if (k < 1 || std::abs(kf - k) > 1e-6 * kf) {
      throw DomainError("density surface: 1/hbar^2 must be an integer");
    }
    return kernel(static_cast<int>(k)).pdf(x) / static_cast<double>(k);
  }

  const LocalKernel& kernel(int k) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->kernels.find(k);
    if (it == cache_->kernels.end()) {
      auto cfg = PbkConfig::make(d_.a(), k, epsilon_, sigma_);
      it = cache_->kernels.emplace(k, std::make_unique<LocalKernel>(d_, cfg)).first;
    }
    return *it->second;
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<int, std::unique_ptr<LocalKernel>> kernels;
  };
  DualPotential d_;
  double epsilon_;
  std::optional<double> sigma_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace pbk
