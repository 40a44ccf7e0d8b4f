#pragma once

/**
 * @file cli.hpp
 * @brief Command-line front end of the `pbk` tool.
 *
 * Every subcommand writes CSV files of the form
 *
 *     # config: <canonical config>
 *     x,value[,value2,...]
 *     5.000000000000e-02,...
 *
 * atomically (temporary file, then rename). Options may also come from a
 * key=value file given with --config; command-line flags take precedence.
 * Exit status: 0 success, 2 configuration error, 3 numerical failure.
 */

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pbk/asymptotics.hpp"
#include "pbk/blowup.hpp"
#include "pbk/disc_pbk.hpp"
#include "pbk/envelope.hpp"
#include "pbk/error.hpp"
#include "pbk/gram_oracle.hpp"
#include "pbk/legendre.hpp"
#include "pbk/mk.hpp"
#include "pbk/model_exact.hpp"
#include "pbk/potential.hpp"

namespace pbk::cli {

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { quiet, info, debug };

inline LogLevel log_level() {
  const char* env = std::getenv("PBK_LOG");
  if (!env) return LogLevel::info;
  const std::string v(env);
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level == LogLevel::quiet) return;
  if (static_cast<int>(log_level()) >= static_cast<int>(level)) std::cerr << msg << '\n';
}

// ---------------------------------------------------------------------------
// Formatting and CSV output

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& values) {
    if (values.size() != header_.size()) throw std::logic_error("csv: row width mismatch");
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += fmt(values[i]);
    }
    rows_.push_back(std::move(line));
  }

  /// Row with leading text cells followed by numbers.
  void add_row(const std::vector<std::string>& labels, const std::vector<double>& values) {
    if (labels.size() + values.size() != header_.size()) {
      throw std::logic_error("csv: row width mismatch");
    }
    std::string line;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i) line += ',';
      line += labels[i];
    }
    for (double v : values) {
      if (!line.empty()) line += ',';
      line += fmt(v);
    }
    rows_.push_back(std::move(line));
  }

  const std::vector<std::string>& header() const { return header_; }

  std::string render(const std::string& config_line) const {
    std::string out = "# config: " + config_line + "\n";
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i) out += ',';
      out += header_[i];
    }
    out += '\n';
    for (const auto& r : rows_) out += r + '\n';
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("io: cannot open " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("io: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Configuration

struct Grid {
  double min = 0.05;
  double max = 0.45;
  int count = 81;

  std::vector<double> points() const {
    std::vector<double> xs;
    for (int i = 0; i < count; ++i) xs.push_back(min + (max - min) * i / (count - 1));
    return xs;
  }
};

struct RunConfig {
  std::string command;
  std::string subcommand;
  std::string potential = "model";
  std::vector<int> ks{200};
  double epsilon = 0.25;
  std::optional<double> sigma;
  std::optional<double> eps_prime;
  bool include_upper = true;
  Grid grid{};
  std::vector<Route> routes{Route::oracle, Route::local_kernel};
  std::string out = ".";
  std::optional<double> rel_tol;
  std::optional<long> n_max;
  int m = 2;
  int N = 2;
  int p = 2;
  /// hbar levels; expansions default to {0.1, 0.07, 0.05, 0.035}, probes to
  /// {0.1, 0.05, 0.025} (probes need integer 1/hbar^2).
  std::optional<std::vector<double>> hbars;
  std::string amplitude = "const:1";
  std::vector<Chart> charts{Chart::interior};
  int order = 2;
  std::string function = "pdf";
  bool probe = false;
  bool gnuplot = false;
  std::string file_a;
  std::string file_b;

  /// Single-line canonical form recorded in every CSV.
  std::string canonical() const {
    std::ostringstream os;
    os << "command=" << command;
    if (!subcommand.empty()) os << ' ' << "kind=" << subcommand;
    os << " potential=" << potential << " k=";
    for (std::size_t i = 0; i < ks.size(); ++i) os << (i ? "," : "") << ks[i];
    os << " eps=" << fmt_short(epsilon);
    os << " sigma=" << (sigma ? fmt_short(*sigma) : "default");
    os << " eps_prime=" << (eps_prime ? fmt_short(*eps_prime) : "default");
    os << " include_upper=" << (include_upper ? "true" : "false");
    os << " x=" << fmt_short(grid.min) << ':' << fmt_short(grid.max) << ':' << grid.count;
    os << " routes=";
    for (std::size_t i = 0; i < routes.size(); ++i) os << (i ? "," : "") << to_string(routes[i]);
    os << " rel_tol=" << (rel_tol ? fmt_short(*rel_tol) : "default");
    os << " n_max=" << (n_max ? std::to_string(*n_max) : "default");
    os << " m=" << m << " N=" << N << " p=" << p << " hbar=";
    if (!hbars) os << "default";
    for (std::size_t i = 0; hbars && i < hbars->size(); ++i) {
      os << (i ? "," : "") << fmt_short((*hbars)[i]);
    }
    os << " amplitude=" << amplitude << " charts=";
    for (std::size_t i = 0; i < charts.size(); ++i) os << (i ? "," : "") << to_string(charts[i]);
    os << " order=" << order << " function=" << function;
    return os.str();
  }

  void validate(double a) const {
    if (grid.count < 2) throw ConfigError("config: grid count must be >= 2");
    if (!(grid.max > grid.min)) throw ConfigError("config: grid max must exceed grid min");
    if (routes.empty()) throw ConfigError("config: routes must be nonempty");
    if (ks.empty()) throw ConfigError("config: k list must be nonempty");
    for (int k : ks) {
      if (k < 1) throw ConfigError("config: k must be >= 1");
    }
    const double s = sigma.value_or(0.8 * a);
    const double ep = eps_prime.value_or(0.5 * (epsilon + s));
    if (!(epsilon >= 0.0)) throw ConfigError("config: eps must be >= 0");
    if (!(epsilon < s)) throw ConfigError("config: eps must be < sigma");
    if (!(epsilon < ep && ep <= s)) throw ConfigError("config: eps_prime must lie in (eps, sigma]");
    if (!(s < a)) throw ConfigError("config: sigma must be < a");
  }

  PbkConfig pbk(double a, int k) const {
    PbkConfig c = PbkConfig::make(a, k, epsilon, sigma, eps_prime, include_upper);
    if (rel_tol) c.rel_tol = *rel_tol;
    return c;
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: " + key + " expects true/false, got '" + v + "'");
}

inline Grid to_grid(const std::string& v) {
  const auto parts = split(v, ':');
  if (parts.size() != 3) throw ConfigError("config: x expects min:max:count");
  Grid g;
  g.min = to_double("x", parts[0]);
  g.max = to_double("x", parts[1]);
  g.count = static_cast<int>(to_long("x", parts[2]));
  return g;
}

}  // namespace detail

/// Applies one key=value setting; keys are the long flag names.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "potential") {
    c.potential = v;
  } else if (key == "k") {
    c.ks.clear();
    for (const auto& s : split(v, ',')) c.ks.push_back(static_cast<int>(to_long(key, s)));
  } else if (key == "eps") {
    c.epsilon = to_double(key, v);
  } else if (key == "sigma") {
    c.sigma = to_double(key, v);
  } else if (key == "eps-prime" || key == "eps_prime") {
    c.eps_prime = to_double(key, v);
  } else if (key == "include-upper" || key == "include_upper") {
    c.include_upper = to_bool(key, v);
  } else if (key == "x") {
    c.grid = to_grid(v);
  } else if (key == "routes") {
    c.routes.clear();
    for (const auto& s : split(v, ',')) c.routes.push_back(parse_route(s));
  } else if (key == "out") {
    c.out = v;
  } else if (key == "rel-tol" || key == "rel_tol") {
    c.rel_tol = to_double(key, v);
  } else if (key == "n-max" || key == "n_max") {
    c.n_max = to_long(key, v);
  } else if (key == "m") {
    c.m = static_cast<int>(to_long(key, v));
  } else if (key == "N") {
    c.N = static_cast<int>(to_long(key, v));
  } else if (key == "p") {
    c.p = static_cast<int>(to_long(key, v));
  } else if (key == "hbar") {
    c.hbars.emplace();
    for (const auto& s : split(v, ',')) c.hbars->push_back(to_double(key, s));
  } else if (key == "amplitude") {
    c.amplitude = v;
  } else if (key == "charts" || key == "chart") {
    c.charts.clear();
    for (const auto& s : split(v, ',')) c.charts.push_back(parse_chart(s));
  } else if (key == "order") {
    c.order = static_cast<int>(to_long(key, v));
  } else if (key == "function") {
    c.function = v;
  } else if (key == "probe") {
    c.probe = to_bool(key, v);
  } else if (key == "gnuplot") {
    c.gnuplot = to_bool(key, v);
  } else if (key == "a") {
    c.file_a = v;
  } else if (key == "b") {
    c.file_b = v;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " of '" + path +
                        "' is not key=value");
    }
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

/// Parses an amplitude such as `const:1`, `poly:1,0,0.5` or
/// `cos:1,1.3,0.2;cos:0.5,2.1,-0.7` (amplitude, frequency, phase).
inline asym::SmoothFn parse_amplitude(const std::string& spec, asym::Interval working = {}) {
  using asym::SmoothFn;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("config: bad amplitude '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  if (kind == "const") {
    auto f = SmoothFn::polynomial({detail::to_double("amplitude", spec.substr(colon + 1))}, working);
    return f;
  }
  if (kind == "poly") {
    std::vector<double> c;
    for (const auto& s : detail::split(spec.substr(colon + 1), ',')) {
      c.push_back(detail::to_double("amplitude", s));
    }
    return SmoothFn::polynomial(c, working);
  }
  if (kind == "cos") {
    std::vector<SmoothFn::Wave> waves;
    for (const auto& w : detail::split(spec, ';')) {
      if (w.rfind("cos:", 0) != 0) throw ConfigError("config: bad amplitude '" + spec + "'");
      const auto v = detail::split(w.substr(4), ',');
      if (v.size() != 3) throw ConfigError("config: cos amplitude needs A,w,phase");
      waves.push_back({detail::to_double("amplitude", v[0]), detail::to_double("amplitude", v[1]),
                       detail::to_double("amplitude", v[2])});
    }
    return SmoothFn::trig_sum(waves, working);
  }
  throw ConfigError("config: unknown amplitude kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Commands

class Runner {
 public:
  explicit Runner(RunConfig c) : c_(std::move(c)), pot_(parse_potential(c_.potential)), d_(pot_) {
    c_.validate(d_.a());
  }

  int run() {
    const std::string& cmd = c_.command;
    if (cmd == "model") return cmd_model();
    if (cmd == "legendre") return cmd_legendre();
    if (cmd == "pdf") return cmd_pdf();
    if (cmd == "expand") return cmd_expand();
    if (cmd == "envelope") return cmd_envelope();
    if (cmd == "blowup") return cmd_blowup();
    if (cmd == "mk") return cmd_mk();
    if (cmd == "compare") return cmd_compare();
    throw ConfigError("config: unknown command '" + cmd + "'");
  }

  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  std::filesystem::path path(const std::string& name) const {
    return std::filesystem::path(c_.out) / name;
  }

  void emit(const std::string& name, const CsvTable& t) {
    const auto p = path(name);
    write_atomic(p, t.render(c_.canonical()));
    written_.push_back(p);
    log(LogLevel::info, "wrote " + p.string());
    if (c_.gnuplot) {
      std::ostringstream gp;
      gp << "set datafile separator ','\nset key autotitle columnhead\n";
      gp << "plot ";
      for (std::size_t i = 1; i < t.header().size(); ++i) {
        gp << (i > 1 ? ", \\\n     " : "") << "'" << p.filename().string() << "' using 1:"
           << i + 1 << " with lines";
      }
      gp << '\n';
      const auto gpp = std::filesystem::path(p.string() + ".gp");
      write_atomic(gpp, gp.str());
      written_.push_back(gpp);
    }
  }

  std::vector<double> xs() const { return c_.grid.points(); }

  std::vector<double> expansion_hbars() const {
    return c_.hbars.value_or(std::vector<double>{0.1, 0.07, 0.05, 0.035});
  }

  int cmd_model() {
    if (c_.potential != "model") throw ConfigError("config: model command requires potential=model");
    for (int k : c_.ks) {
      CsvTable t({"x", "exact", "leading", "error"});
      for (double x : xs()) {
        ModelQuery q{k, c_.epsilon, x};
        const double e = model_pdf(q), l = model_pdf_leading(q);
        t.add_row({x, e, l, e - l});
      }
      emit("model_k" + std::to_string(k) + ".csv", t);
    }
    return 0;
  }

  int cmd_legendre() {
    CsvTable t({"x", "t", "u", "u_x", "u_xx", "involution_residual", "hessian_residual"});
    const auto& p = d_.potential();
    for (double x : xs()) {
      const double tt = d_.t_of_x(x);
      const double u = d_.u(x), uxx = d_.u_xx(x);
      const double inv = std::abs(p.phi(tt) - (x * tt - u));
      const double hes = std::abs(uxx * p.phi_tt(tt) - 1.0);
      t.add_row({x, tt, u, tt, uxx, inv, hes});
    }
    emit("legendre.csv", t);
    return 0;
  }

  DensityProfile route_profile(Route r, int k) const {
    const auto grid = xs();
    switch (r) {
      case Route::oracle: {
        GramOracle g(d_, k, c_.epsilon, c_.n_max.value_or(default_n_max(d_.a(), k, c_.sigma.value_or(-1.0))));
        return g.profile(grid);
      }
      case Route::local_kernel: return LocalKernel(d_, c_.pbk(d_.a(), k)).profile(grid);
      case Route::model: {
        if (c_.potential != "model") throw ConfigError("config: route model requires potential=model");
        DensityProfile p{k, Route::model, grid, {}, {}};
        for (double x : grid) p.value.push_back(k * model_pdf({k, c_.epsilon, x}));
        return p;
      }
      case Route::asymptotic: {
        DensityProfile p{k, Route::asymptotic, grid, {}, {}};
        for (double x : grid) p.value.push_back(k * asym::pdf_leading(d_, c_.epsilon, k, x));
        return p;
      }
    }
    throw ConfigError("config: unknown route");
  }

  static CsvTable profile_table(const DensityProfile& p) {
    CsvTable t({"x", "value", "scaled", "log_value"});
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      const double lv = p.log_value.empty() ? std::log(p.value[i]) : p.log_value[i];
      t.add_row({p.x[i], p.value[i], p.value[i] / p.k, lv});
    }
    return t;
  }

  int cmd_pdf() {
    for (int k : c_.ks) {
      std::vector<DensityProfile> profiles;
      for (Route r : c_.routes) {
        profiles.push_back(route_profile(r, k));
        emit("pdf_" + to_string(r) + "_k" + std::to_string(k) + ".csv", profile_table(profiles.back()));
      }
      if (profiles.size() >= 2) {
        CsvTable t({"route_a", "route_b", "sup_abs", "sup_rel", "sup_abs_scaled", "argmax_x"});
        for (std::size_t i = 1; i < profiles.size(); ++i) {
          const auto rep = compare(profiles[i], profiles[0]);
          t.add_row({to_string(c_.routes[i]), to_string(c_.routes[0])},
                    {rep.sup_abs, rep.sup_rel, rep.sup_abs_scaled, rep.argmax_x});
          std::cout << "compare k=" << k << ' ' << to_string(c_.routes[i]) << " vs "
                    << to_string(c_.routes[0]) << ": sup_abs_scaled=" << fmt(rep.sup_abs_scaled)
                    << " sup_rel=" << fmt(rep.sup_rel) << " argmax_x=" << fmt(rep.argmax_x) << '\n';
        }
        emit("compare_k" + std::to_string(k) + ".csv", t);
      }
    }
    return 0;
  }

  int cmd_expand() {
    const std::string& kind = c_.subcommand;
    if (kind == "em") return expand_em();
    if (kind == "gauss") return expand_gauss();
    if (kind == "laplace") return expand_laplace();
    if (kind == "leading") return expand_leading();
    throw ConfigError("config: expand needs one of em, gauss, laplace, leading");
  }

  int expand_em() {
    for (int k : c_.ks) {
      const auto cfg = c_.pbk(d_.a(), k);
      std::vector<std::string> header{"x", "direct", "expansion", "residual", "remainder_bound",
                                      "integral"};
      for (int j = 0; j < c_.m; ++j) header.push_back("A" + std::to_string(j));
      CsvTable t(header);
      const auto amp = asym::laplace_amplitude(d_);
      for (double x : xs()) {
        if (!(x < cfg.eps_prime)) continue;
        const auto e = asym::em_pdf_sum(d_, cfg, x, c_.m);
        const double direct = asym::em_direct_sum(d_, cfg, x, amp);
        std::vector<double> row{x, direct, e.evaluate(), direct - e.evaluate(), e.remainder_bound,
                                0.0};
        row.resize(header.size(), 0.0);
        for (const auto& [label, term] : e.components) {
          if (label == "integral") row[5] = term.value;
          else row[6 + std::stoi(label.substr(1))] = term.value;
        }
        t.add_row(row);
      }
      emit("expand_em_k" + std::to_string(k) + ".csv", t);
    }
    return 0;
  }

  int expand_gauss() {
    const auto f = parse_amplitude(c_.amplitude);
    for (double h : expansion_hbars()) {
      std::vector<std::string> header{"x", "quadrature", "expansion", "residual", "remainder_bound"};
      for (int j = 0; j <= c_.N; ++j) {
        header.push_back("Phi_" + std::to_string(2 * j));
        header.push_back("dPhi_" + std::to_string(2 * j + 1));
      }
      CsvTable t(header);
      for (double x : xs()) {
        const auto e = asym::incomplete_gaussian(x, h, f, c_.N);
        const double zq = asym::incomplete_gaussian_quadrature(x, h, f);
        std::vector<double> row{x, zq, e.evaluate(), zq - e.evaluate(), e.remainder_bound};
        for (const auto& [label, term] : e.components) row.push_back(term.value);
        t.add_row(row);
      }
      emit("expand_gauss_h" + fmt_short(h) + ".csv", t);
    }
    return 0;
  }

  int expand_laplace() {
    const double nu = c_.epsilon;
    if (!(nu > 0.0)) throw ConfigError("config: laplace expansion needs eps > 0");
    const double c = 2.0 * d_.u_xx(nu);
    const double w = 0.6 * std::min(nu, d_.a() - nu);
    const asym::Interval work{-w, w};
    const double u_nu = d_.u(nu);
    // f(t) = 2 U(nu, nu + t) has f'(t) = 2 t u_xx(nu + t), so q' = t (2 u_xx(nu + t) - c) is
    // known in closed form; its derivatives come from a Chebyshev interpolant.
    auto q_value = [this, nu, u_nu, c](double t) {
      return 2.0 * exponent_U_with(d_, nu, u_nu, d_.t_of_x(nu + t)) - 0.5 * c * t * t;
    };
    const auto q_slope = asym::SmoothFn::chebyshev(
        [this, nu, c](double t) { return t * (2.0 * d_.u_xx(nu + t) - c); }, work, 48, 12);
    const asym::SmoothFn q(
        [q_value, q_slope](int r, double t) {
          return r == 0 ? q_value(t) : q_slope.derivative(r - 1, t);
        },
        12, work);
    const auto alpha = parse_amplitude(c_.amplitude, work);
    for (double h : expansion_hbars()) {
      CsvTable t({"x", "quadrature", "expansion", "leading", "residual", "remainder_bound"});
      for (double x : xs()) {
        const double y = x - nu;
        if (!(y > work.lo)) continue;
        const auto e = asym::general_exponent(y, h, c, q, alpha, c_.p);
        const double fq = asym::general_exponent_quadrature(y, h, c, q, alpha);
        const double lead = alpha(0.0) / std::sqrt(c) * special::normal_cdf(std::sqrt(c) * y / h);
        t.add_row({x, fq, e.evaluate(), lead, fq - e.evaluate(), e.remainder_bound});
      }
      emit("expand_laplace_h" + fmt_short(h) + ".csv", t);
    }
    return 0;
  }

  int expand_leading() {
    for (int k : c_.ks) {
      LocalKernel lk(d_, c_.pbk(d_.a(), k));
      CsvTable t({"x", "leading", "local_scaled", "difference"});
      for (double x : xs()) {
        const double l = asym::pdf_leading(d_, c_.epsilon, k, x);
        const double v = lk.pdf(x) / k;
        t.add_row({x, l, v, v - l});
      }
      emit("expand_leading_k" + std::to_string(k) + ".csv", t);
    }
    return 0;
  }

  int cmd_envelope() {
    if (!(c_.epsilon > 0.0)) throw ConfigError("config: envelope needs eps > 0");
    CsvTable t({"x", "phi", "psi", "gap", "predicted_rate"});
    for (double x : xs()) {
      const double phi = envelope_right_branch(d_, x);
      const double psi = envelope_psi(d_, c_.epsilon, x);
      t.add_row({x, phi, psi, phi - psi, predicted_decay_rate(d_, c_.epsilon, x)});
    }
    emit("envelope.csv", t);
    const auto r = c1_defect_report(d_, c_.epsilon);
    CsvTable s({"eps", "left_slope", "right_slope", "defect", "left_curvature", "right_curvature"});
    s.add_row({c_.epsilon, r.left_slope, r.right_slope, r.defect, r.left_curvature,
               r.right_curvature});
    emit("envelope_c1.csv", s);
    return 0;
  }

  LiftableFn probe_function() const {
    const double eps = c_.epsilon;
    if (c_.function == "pdf") {
      DensitySurface surface(d_, eps, c_.sigma);
      return {[surface](double x, double h) { return surface(x, h); }};
    }
    if (c_.function == "gauss") {
      return {[eps](double x, double h) { return std::exp(-(x - eps) * (x - eps) / (h * h)); },
              [](const BlowupPoint& p) {
                if (p.chart == Chart::interior) return std::exp(-p.a * p.a);
                return 0.0;
              }};
    }
    if (c_.function == "leading") {
      const double s = std::sqrt(2.0 * d_.u_xx(eps));
      return {[s, eps](double x, double h) { return special::normal_cdf(s * (x - eps) / h); }};
    }
    throw ConfigError("config: unknown probe function '" + c_.function + "'");
  }

  int cmd_blowup() {
    if (!c_.probe) throw ConfigError("config: blowup needs --probe");
    const auto f = probe_function();
    CsvTable t({"chart", "level", "max_difference", "ratio", "skipped"});
    ProbeOptions opts;
    if (c_.hbars) opts.levels = *c_.hbars;
    for (Chart ch : c_.charts) {
      const auto rep = smoothness_probe(f, ch, c_.order, c_.epsilon, opts);
      for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const double ratio = i ? rep.ratios[i - 1] : 0.0;
        t.add_row({to_string(ch)}, {rep.levels[i].level, rep.levels[i].max_difference, ratio,
                                    static_cast<double>(rep.levels[i].skipped)});
      }
      std::cout << "probe " << to_string(ch) << " order " << c_.order << ": "
                << (rep.bounded ? "bounded" : "not bounded") << '\n';
    }
    emit("blowup_probe.csv", t);
    return 0;
  }

  int cmd_mk() {
    for (int k : c_.ks) {
      GramOracle g(d_, k, 0.0, c_.n_max.value_or(default_n_max(d_.a(), k)));
      CsvTable t({"x", "mk", "x_leading", "residual_sqrt_k"});
      for (double x : xs()) {
        const double m = mk_exact(g, x);
        t.add_row({x, m, mk_leading(x), (m - mk_leading(x)) * std::sqrt(double(k))});
      }
      emit("mk_k" + std::to_string(k) + ".csv", t);
    }
    return 0;
  }

  static DensityProfile read_profile(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("config: cannot read profile '" + file + "'");
    DensityProfile p;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') {
        const auto pos = line.find(" k=");
        if (pos != std::string::npos) p.k = std::atoi(line.c_str() + pos + 3);
        continue;
      }
      if (!header) {
        header = true;
        continue;
      }
      const auto cells = detail::split(line, ',');
      if (cells.size() < 2) throw ConfigError("config: malformed profile row in '" + file + "'");
      p.x.push_back(detail::to_double("x", cells[0]));
      p.value.push_back(detail::to_double("value", cells[1]));
    }
    if (p.k < 1) p.k = 1;
    return p;
  }

  int cmd_compare() {
    if (c_.file_a.empty() || c_.file_b.empty()) throw ConfigError("config: compare needs --a and --b");
    const auto a = read_profile(c_.file_a), b = read_profile(c_.file_b);
    const auto rep = compare(a, b);
    CsvTable t({"sup_abs", "sup_rel", "sup_abs_scaled", "argmax_x"});
    t.add_row({rep.sup_abs, rep.sup_rel, rep.sup_abs_scaled, rep.argmax_x});
    emit("compare.csv", t);
    std::cout << "sup_abs=" << fmt(rep.sup_abs) << " sup_rel=" << fmt(rep.sup_rel)
              << " argmax_x=" << fmt(rep.argmax_x) << '\n';
    return 0;
  }

  RunConfig c_;
  RadialPotential pot_;
  DualPotential d_;
  std::vector<std::filesystem::path> written_;
};

/// Validates and runs; exceptions propagate (see main for exit-status mapping).
inline int run(const RunConfig& c) { return Runner(c).run(); }

namespace detail {

struct Flag {
  const char* name;
  const char* help;
};

inline constexpr Flag kFlags[] = {
    {"potential", "model or perturbed:a1,a2,..."},
    {"k", "comma-separated list of k"},
    {"eps", "vanishing fraction eps"},
    {"sigma", "cutoff plateau end (default 0.8 a; 0.6 a for mk)"},
    {"eps-prime", "truncation fraction (default (eps + sigma)/2)"},
    {"include-upper", "sum the local kernel up to sigma k (true/false)"},
    {"x", "grid min:max:count"},
    {"routes", "comma-separated routes: oracle, local, model, asymptotic"},
    {"out", "output directory"},
    {"rel-tol", "quadrature relative tolerance for normalizations"},
    {"n-max", "oracle truncation degree"},
    {"m", "Euler-Maclaurin order"},
    {"N", "Gaussian expansion order"},
    {"p", "Taylor order of the general exponent expansion"},
    {"hbar", "comma-separated hbar levels"},
    {"amplitude", "amplitude: const:c, poly:c0,c1,..., cos:A,w,phase;..."},
    {"charts", "blow-up charts: interior, corner_plus, corner_minus, polar, direct"},
    {"order", "divided-difference order of the smoothness probe"},
    {"function", "probe function: pdf, gauss, leading"},
    {"a", "first profile CSV (compare)"},
    {"b", "second profile CSV (compare)"},
};

}  // namespace detail

/// Parses argv and runs, mapping failures to exit statuses 2 and 3 with a
/// single-line reason on stderr.
inline int main(int argc, char** argv) {
  CLI::App app{"Partial Bergman density numerics on the disc"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_files;
  std::map<std::string, bool> probe_flags, gnuplot_flags;

  auto add_common = [&](CLI::App* sub, const std::string& key) {
    for (const auto& f : detail::kFlags) {
      sub->add_option(std::string("--") + f.name, values[key][f.name], f.help);
    }
    sub->add_option("--config", config_files[key], "key=value configuration file");
    sub->add_flag("--gnuplot", gnuplot_flags[key], "write a gnuplot script next to each CSV");
    sub->add_flag("--probe", probe_flags[key], "run smoothness probes");
  };

  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"model", "legendre", "pdf", "envelope", "blowup", "mk", "compare"}) {
    auto* s = app.add_subcommand(name);
    add_common(s, name);
    subs.emplace_back(name, s);
  }
  auto* expand = app.add_subcommand("expand", "asymptotic expansions");
  expand->require_subcommand(1);
  for (const char* kind : {"em", "gauss", "laplace", "leading"}) {
    auto* s = expand->add_subcommand(kind);
    const std::string key = std::string("expand:") + kind;
    add_common(s, key);
    subs.emplace_back(key, s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig cfg;
    std::string key;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) key = name;
    }
    const auto colon = key.find(':');
    cfg.command = colon == std::string::npos ? key : key.substr(0, colon);
    if (colon != std::string::npos) cfg.subcommand = key.substr(colon + 1);

    std::map<std::string, std::string> merged;
    if (!config_files[key].empty()) merged = read_config_file(config_files[key]);
    auto* sub = std::find_if(subs.begin(), subs.end(), [&](auto& s) { return s.first == key; })->second;
    for (const auto& f : detail::kFlags) {
      if (sub->count(std::string("--") + f.name) > 0) merged[f.name] = values[key][f.name];
    }
    for (const auto& [k, v] : merged) apply_setting(cfg, k, v);
    if (probe_flags[key]) cfg.probe = true;
    if (gnuplot_flags[key]) cfg.gnuplot = true;
    return run(cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numeric: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace pbk::cli
