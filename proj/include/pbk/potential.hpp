#pragma once

/**
 * @file potential.hpp
 * @brief Circle-invariant potentials on the unit disc.
 *
 * A potential is a strictly convex function phi(t) of the log-radius
 * t = log|z| on (-inf, 0], supplied with analytic first and second
 * derivatives. The hermitian weight is e^{-2k phi}; with this convention
 * the flat model weight e^{-k|z|^2} is phi(t) = e^{2t}/2.
 *
 * The moment map is x = phi_t(t). It vanishes at the origin
 * (t -> -inf) and equals the boundary moment value a = phi_t(0) on |z| = 1.
 */

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pbk/error.hpp"

namespace pbk {

struct RadialPotential {
  std::function<double(double)> phi;
  std::function<double(double)> phi_t;
  std::function<double(double)> phi_tt;
  /// Numerical lower cutoff for t; below it e^{2nt} underflows for n >= 1.
  double t_floor = -18.0;
  /// Canonical name as accepted by the command line (`model`, `perturbed:...`).
  std::string name;

  /// Moment value on the boundary circle |z| = 1.
  double boundary_moment() const { return phi_t(0.0); }
};

/// The model potential phi(t) = e^{2t}/2 of the weight e^{-k|z|^2}.
inline RadialPotential bargmann_fock() {
  RadialPotential p;
  p.phi = [](double t) { return 0.5 * std::exp(2.0 * t); };
  p.phi_t = [](double t) { return std::exp(2.0 * t); };
  p.phi_tt = [](double t) { return 2.0 * std::exp(2.0 * t); };
  p.name = "model";
  return p;
}

/// phi(t) = e^{2t}/2 + sum_j amplitudes[j-1] e^{(2+j)t}, j = 1, 2, ...
///
/// Strict convexity is checked on a dense grid of (t_floor, 0]; a violation
/// throws ConfigError naming the first offending t.
inline RadialPotential perturbed(std::vector<double> amplitudes, double t_floor = -18.0) {
  if (amplitudes.empty()) {
    auto p = bargmann_fock();
    p.t_floor = t_floor;
    return p;
  }
  RadialPotential p;
  p.t_floor = t_floor;
  p.phi = [amplitudes](double t) {
    double v = 0.5 * std::exp(2.0 * t);
    for (std::size_t j = 1; j <= amplitudes.size(); ++j) {
      v += amplitudes[j - 1] * std::exp((2.0 + j) * t);
    }
    return v;
  };
  p.phi_t = [amplitudes](double t) {
    double v = std::exp(2.0 * t);
    for (std::size_t j = 1; j <= amplitudes.size(); ++j) {
      v += (2.0 + j) * amplitudes[j - 1] * std::exp((2.0 + j) * t);
    }
    return v;
  };
  p.phi_tt = [amplitudes](double t) {
    double v = 2.0 * std::exp(2.0 * t);
    for (std::size_t j = 1; j <= amplitudes.size(); ++j) {
      const double m = 2.0 + j;
      v += m * m * amplitudes[j - 1] * std::exp(m * t);
    }
    return v;
  };
  std::ostringstream name;
  name.precision(12);
  name << "perturbed:";
  for (std::size_t j = 0; j < amplitudes.size(); ++j) {
    if (j) name << ',';
    name << amplitudes[j];
  }
  p.name = name.str();

  // phi_tt = e^{2t}(2 + sum m^2 a_j e^{jt}); test the bracket, which does not underflow.
  constexpr int kGrid = 20000;
  for (int i = 0; i <= kGrid; ++i) {
    const double t = t_floor * (1.0 - static_cast<double>(i) / kGrid);
    double bracket = 2.0;
    for (std::size_t j = 1; j <= amplitudes.size(); ++j) {
      const double m = 2.0 + j;
      bracket += m * m * amplitudes[j - 1] * std::exp(static_cast<double>(j) * t);
    }
    if (!(bracket > 0.0)) {
      std::ostringstream os;
      os.precision(6);
      os << "potential: perturbed potential is not strictly convex at t=" << t;
      throw ConfigError(os.str());
    }
  }
  return p;
}

/// x = phi_t(t), strictly increasing in t.
inline double moment_map(const RadialPotential& p, double t) {
  if (t > 0.0) throw DomainError("moment_map: t must be <= 0");
  return p.phi_t(t);
}

/// Parses `model` or `perturbed:a1,a2,...`.
inline RadialPotential parse_potential(const std::string& spec) {
  if (spec == "model") return bargmann_fock();
  const std::string prefix = "perturbed:";
  if (spec.rfind(prefix, 0) == 0) {
    std::vector<double> amps;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        std::size_t used = 0;
        amps.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("config: bad perturbation amplitude '" + item + "'");
      }
    }
    return perturbed(std::move(amps));
  }
  throw ConfigError("config: unknown potential '" + spec + "'");
}

}  // namespace pbk
