#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pbk/envelope.hpp"
#include "pbk/gram_oracle.hpp"

using namespace pbk;

TEST(Envelope, ModelBranchesClosedForm) {
  DualPotential d(bargmann_fock());
  const double eps = 0.25;
  for (double x : {0.05, 0.1, 0.2, 0.25, 0.4, 0.9}) {
    const double t = 0.5 * std::log(x);
    const double psi = x <= eps ? eps * t - oracle::model_u(eps) : 0.5 * x;
    EXPECT_NEAR(envelope_psi(d, eps, x), psi, 1e-14) << x;
    EXPECT_NEAR(envelope_right_branch(d, x) - envelope_psi(d, eps, x),
                x < eps ? oracle::model_U(eps, x) : 0.0, 1e-14);
  }
}

class EnvelopeProps : public ::testing::TestWithParam<const char*> {};

TEST_P(EnvelopeProps, BelowPotentialAndTangentAtEps) {
  DualPotential d(parse_potential(GetParam()));
  for (double eps : {0.1, 0.25, 0.5}) {
    for (double x = 0.01; x < d.a(); x += 0.01) {
      EXPECT_LE(envelope_psi(d, eps, x), envelope_right_branch(d, x) + 1e-15);
      EXPECT_GE(envelope_gap(d, eps, x), 0.0);
      EXPECT_NEAR(predicted_decay_rate(d, eps, x), 2.0 * envelope_gap(d, eps, x), 1e-15);
    }
    EXPECT_LT(c1_defect(d, eps), 1e-8) << eps;
  }
}

TEST_P(EnvelopeProps, CurvatureJumpsAtEps) {
  DualPotential d(parse_potential(GetParam()));
  const auto r = c1_defect_report(d, 0.25);
  EXPECT_GT(std::abs(r.left_curvature - r.right_curvature), 1e-2);
  // Both one-sided slopes equal eps u_xx(eps): d/dx eps t(x) = eps / phi_tt.
  EXPECT_NEAR(r.left_slope, 0.25 * d.u_xx(0.25), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Potentials, EnvelopeProps, ::testing::Values("model", "perturbed:0.1"));

TEST(Envelope, ModelCurvaturesAreKnown) {
  // Left: 0.25 t(x) has second derivative -0.25/(2x^2) = -2 at x = 0.25; right: x/2 is linear.
  DualPotential d(bargmann_fock());
  const auto r = c1_defect_report(d, 0.25);
  EXPECT_NEAR(r.left_slope, 0.5, 1e-8);
  EXPECT_NEAR(r.right_slope, 0.5, 1e-8);
  EXPECT_NEAR(r.left_curvature, -2.0, 1e-3);
  EXPECT_NEAR(r.right_curvature, 0.0, 1e-6);
}

TEST(Envelope, ForbiddenRegion) {
  const auto f = forbidden_region(0.25);
  EXPECT_TRUE(f.contains(0.0));
  EXPECT_TRUE(f.contains(0.2499));
  EXPECT_FALSE(f.contains(0.25));
  EXPECT_TRUE(forbidden_region(0.0).empty());
  EXPECT_THROW(forbidden_region(-0.1), DomainError);
}

TEST(Envelope, DecayFitRecoversSyntheticRates) {
  // -log rho = 0.7 k + 1.5 log k - 2 exactly.
  std::vector<DensityProfile> ps;
  for (int k : {100, 200, 400, 800}) {
    DensityProfile p;
    p.k = k;
    p.x = {0.1, 0.2};
    p.log_value = {-(0.7 * k + 1.5 * std::log(k) - 2.0), -(0.3 * k)};
    p.value = {std::exp(p.log_value[0]), std::exp(p.log_value[1])};
    ps.push_back(p);
  }
  const auto fit = decay_rate_fit(ps, 0.1);
  EXPECT_NEAR(fit.rate, 0.7, 1e-10);
  EXPECT_NEAR(fit.log_k_coefficient, 1.5, 1e-8);
  EXPECT_NEAR(fit.intercept, -2.0, 1e-7);
  // Linear interpolation of log values in x.
  EXPECT_NEAR(decay_rate_measure(ps, 0.15), 0.5, 1e-8);
  EXPECT_THROW(decay_rate_measure(std::span(ps).first(2), 0.1), DomainError);
  EXPECT_THROW(decay_rate_measure(ps, 0.3), DomainError);
}

TEST(Envelope, OracleDecayMatchesEnvelopeGap) {
  DualPotential d(bargmann_fock());
  std::vector<DensityProfile> ps;
  const std::vector<double> xs{0.1, 0.15};
  for (int k : {200, 400, 800}) ps.push_back(GramOracle(d, k, 0.25, default_n_max(1.0, k)).profile(xs));
  for (double x : xs) {
    const double rate = decay_rate_measure(ps, x), pred = predicted_decay_rate(d, 0.25, x);
    EXPECT_NEAR(rate / pred, 1.0, 0.01) << x;
  }
}

TEST(Envelope, DomainChecks) {
  DualPotential d(bargmann_fock());
  EXPECT_THROW(envelope_psi(d, 0.0, 0.1), DomainError);
  EXPECT_THROW(envelope_psi(d, 0.25, 1.5), DomainError);
  EXPECT_THROW(c1_defect(d, 1.0), DomainError);
}
