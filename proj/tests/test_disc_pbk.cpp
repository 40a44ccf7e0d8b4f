#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "pbk/disc_pbk.hpp"
#include "pbk/gram_oracle.hpp"
#include "pbk/quadrature.hpp"

using namespace pbk;

TEST(PbkConfig, DefaultsAndCounts) {
  const auto c = PbkConfig::make(1.0, 200, 0.25);
  EXPECT_DOUBLE_EQ(c.sigma, 0.8);
  EXPECT_DOUBLE_EQ(c.eps_prime, 0.525);
  EXPECT_DOUBLE_EQ(c.chi.support_end, 0.9);
  EXPECT_EQ(c.n_lo(), 50);
  EXPECT_EQ(c.n_hi(), 160);
  const auto lower = PbkConfig::make(1.0, 200, 0.25, {}, {}, false);
  EXPECT_EQ(lower.n_hi(), 105);
}

TEST(PbkConfig, ValidationMessages) {
  auto msg = [](auto&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(msg([] { PbkConfig::make(1.0, 100, 0.85); }), "config: eps must be < sigma");
  EXPECT_EQ(msg([] { PbkConfig::make(1.0, 100, 0.25, 0.5, 0.6); }), "config: eps_prime must lie in (eps, sigma]");
  EXPECT_EQ(msg([] { PbkConfig::make(1.0, 100, 0.25, 1.0); }), "config: sigma must be < a");
  EXPECT_EQ(msg([] { PbkConfig::make(1.0, 0, 0.25); }), "config: k must be >= 1");
}

TEST(CutoffChi, PlateauSupportAndSmoothness) {
  const CutoffChi chi{0.8, 0.9};
  EXPECT_EQ(chi(0.3), 1.0);
  EXPECT_EQ(chi(0.8), 1.0);
  EXPECT_EQ(chi(0.9), 0.0);
  EXPECT_EQ(chi(0.95), 0.0);
  EXPECT_NEAR(chi(0.85), 0.5, 1e-15);
  double prev = 1.0;
  for (double x = 0.8; x <= 0.9; x += 1e-3) {
    EXPECT_LE(chi(x), prev + 1e-15);
    prev = chi(x);
    if (chi(x) > 0.0) {
      EXPECT_NEAR(std::exp(chi.log_value(x)), chi(x), 1e-14);
    }
  }
  // All derivatives vanish at the plateau end: the first difference is far below h.
  EXPECT_LT(1.0 - chi(0.8 + 1e-3), 1e-30);
}

class LocalKernelProps : public ::testing::TestWithParam<const char*> {};

TEST_P(LocalKernelProps, EachBasisElementIsNormalized) {
  DualPotential d(parse_potential(GetParam()));
  for (int k : {60, 240}) {
    const auto cfg = PbkConfig::make(d.a(), k, 0.25);
    LocalKernel lk(d, cfg);
    for (std::size_t i = 0; i < lk.table().size(); i += 13) {
      const auto& e = lk.table()[i];
      quad::Options opts;
      opts.abs_floor = 0.0;
      opts.breakpoints = {e.nu, cfg.sigma};
      const double mass = quad::integrate(
                              [&](double x) {
                                return cfg.chi(x) * e.G() * std::exp(-2.0 * k * exponent_U(d, e.nu, x));
                              },
                              d.x_floor(), cfg.chi.support_end, 1e-12, opts)
                              .value;
      EXPECT_NEAR(mass, 1.0, 1e-9) << "k=" << k << " n=" << e.n;
    }
  }
}

TEST_P(LocalKernelProps, AgreesWithOracleAndConvergesInK) {
  DualPotential d(parse_potential(GetParam()));
  auto sup_err = [&](int k) {
    LocalKernel lk(d, PbkConfig::make(d.a(), k, 0.25));
    GramOracle g(d, k, 0.25, default_n_max(d.a(), k));
    double s = 0.0;
    for (double x = 0.05; x <= 0.45 + 1e-12; x += 0.005) s = std::max(s, std::abs(lk.pdf(x) - g.pdf(x)) / k);
    return s;
  };
  const double e100 = sup_err(100), e200 = sup_err(200);
  EXPECT_LE(e200, 1e-3);
  EXPECT_LE(e200, 0.3 * e100);
}

TEST_P(LocalKernelProps, LogPdfMatchesPdfAndProfile) {
  DualPotential d(parse_potential(GetParam()));
  LocalKernel lk(d, PbkConfig::make(d.a(), 200, 0.25));
  const std::vector<double> xs{0.05, 0.15, 0.25, 0.35};
  const auto p = lk.profile(xs);
  p.validate();
  EXPECT_EQ(p.route, Route::local_kernel);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(p.value[i], lk.pdf(xs[i]), 1e-12 * lk.pdf(xs[i]));
    EXPECT_NEAR(p.log_value[i], lk.log_pdf(xs[i]), 1e-12);
  }
  EXPECT_DOUBLE_EQ(pdf_local(d, lk.config(), 0.25), lk.pdf(0.25));
}

INSTANTIATE_TEST_SUITE_P(Potentials, LocalKernelProps, ::testing::Values("model", "perturbed:0.1"));

TEST(LocalKernel, OffDiagonalReducesToDiagonalAndIsBounded) {
  DualPotential d(bargmann_fock());
  const auto cfg = PbkConfig::make(1.0, 100, 0.25);
  LocalKernel lk(d, cfg);
  for (double x : {0.2, 0.3, 0.5}) {
    EXPECT_NEAR(lk.offdiag(x, x, 0.0), lk.pdf(x), 1e-12 * lk.pdf(x));
    for (double xp : {0.22, 0.35}) {
      for (double th : {0.0, 0.3, 2.0}) {
        const double v = lk.offdiag(x, xp, th);
        EXPECT_LE(v, std::sqrt(lk.pdf(x) * lk.pdf(xp)) * (1 + 1e-12));
        EXPECT_NEAR(v, kernel_offdiag(d, cfg, x, xp, th), 1e-12 * (v + 1e-300));
      }
    }
  }
}

TEST(LocalKernel, NormalizationConstantsNearLaplaceValue) {
  DualPotential d(bargmann_fock());
  const int k = 400;
  const auto G = normalization_constants(d, PbkConfig::make(1.0, k, 0.25));
  // 1/G = int e^{-2kU} dx ~ sqrt(pi / (k u_xx)) for nu well inside the plateau.
  for (long n : {150L, 200L, 280L}) {
    const double nu = double(n) / k;
    const double laplace = std::sqrt(k * d.u_xx(nu) / std::numbers::pi);
    EXPECT_NEAR(G.at(n) / laplace, 1.0, 2.0 / k) << n;
  }
}

TEST(LocalKernel, DirectAndLogSpaceNormalizationsBothTrackOracle) {
  // k = 199 normalizes by direct quadrature, k = 200 in log space.
  DualPotential d(bargmann_fock());
  for (int k : {199, 200}) {
    LocalKernel lk(d, PbkConfig::make(1.0, k, 0.25));
    GramOracle g(d, k, 0.25, default_n_max(1.0, k));
    for (double x : {0.1, 0.25, 0.3, 0.45}) {
      EXPECT_NEAR(lk.pdf(x) / k, g.pdf(x) / k, 1e-5) << "k=" << k << " x=" << x;
      EXPECT_NEAR(lk.log_pdf(x), g.log_pdf(x), 1e-3) << "k=" << k << " x=" << x;
    }
  }
}

TEST(DensitySurface, IntegerInverseSquareAndCaching) {
  DualPotential d(bargmann_fock());
  DensitySurface s(d, 0.25);
  EXPECT_THROW(s(0.3, 0.07), DomainError);
  const double v = s(0.3, 0.1);
  LocalKernel lk(d, PbkConfig::make(1.0, 100, 0.25));
  EXPECT_DOUBLE_EQ(v, lk.pdf(0.3) / 100);
  EXPECT_EQ(&s.kernel(100), &s.kernel(100));
}

TEST(DensitySurface, ConcurrentEvaluationIsConsistent) {
  DualPotential d(bargmann_fock());
  DensitySurface s(d, 0.25);
  std::vector<double> out(8);
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i) ts.emplace_back([&, i] { out[i] = s(0.2 + 0.01 * i, 0.1); });
  for (auto& t : ts) t.join();
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(out[i], s(0.2 + 0.01 * i, 0.1));
}

TEST(Route, NamesRoundTrip) {
  for (Route r : {Route::oracle, Route::local_kernel, Route::asymptotic, Route::model}) {
    EXPECT_EQ(parse_route(to_string(r)), r);
  }
  EXPECT_THROW(parse_route("bogus"), ConfigError);
}
