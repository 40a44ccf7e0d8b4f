#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pbk/quadrature.hpp"

using namespace pbk;

TEST(Integrate, GaussianAgainstErfSeries) {
  const auto r = quad::integrate([](double t) { return std::exp(-t * t); }, -2.0, 3.0, 1e-13);
  const double ref = 0.5 * std::sqrt(std::numbers::pi) * (oracle::erf_series(3.0) + oracle::erf_series(2.0));
  EXPECT_NEAR(r.value, ref, 1e-13);
  EXPECT_LE(r.error_estimate, 1e-12);
}

TEST(Integrate, PolynomialsExact) {
  for (int p = 0; p <= 20; ++p) {
    const auto r = quad::integrate([p](double t) { return std::pow(t, p); }, 0.0, 1.0, 1e-12);
    EXPECT_NEAR(r.value, 1.0 / (p + 1), 1e-15) << "degree " << p;
    if (p <= 13) {
      EXPECT_EQ(r.evaluations, 15u) << "degree " << p;
    }
  }
}

TEST(Integrate, BreakpointsAbsorbKinks) {
  quad::Options opts;
  opts.breakpoints = {0.3};
  const auto with = quad::integrate([](double t) { return std::abs(t - 0.3); }, 0.0, 1.0, 1e-12, opts);
  EXPECT_NEAR(with.value, 0.5 * (0.09 + 0.49), 1e-15);
  EXPECT_EQ(with.evaluations, 30u);
}

TEST(Integrate, AgreesWithSimpsonOnOscillatoryIntegrand) {
  auto f = [](double t) { return std::cos(7.0 * t) * std::exp(-t); };
  const auto r = quad::integrate(f, 0.0, 4.0, 1e-12);
  EXPECT_NEAR(r.value, oracle::simpson(f, 0.0, 4.0, 20000), 1e-11);
}

TEST(Integrate, RejectsEmptyIntervalAndNaN) {
  EXPECT_THROW(quad::integrate([](double) { return 1.0; }, 1.0, 1.0, 1e-10), DomainError);
  EXPECT_THROW(quad::integrate([](double) { return std::nan(""); }, 0.0, 1.0, 1e-10), NumericError);
}

TEST(Integrate, BudgetExhaustionCarriesPartialResult) {
  quad::Options opts;
  opts.max_evaluations = 300;
  opts.abs_floor = 0.0;
  try {
    quad::integrate([](double t) { return 1.0 / std::sqrt(t); }, 0.0, 1.0, 1e-15, opts);
    FAIL() << "expected QuadratureError";
  } catch (const quad::QuadratureError& e) {
    EXPECT_GT(e.partial().value, 1.5);
    EXPECT_LT(e.partial().value, 2.0);
    EXPECT_GT(e.partial().error_estimate, 0.0);
    EXPECT_LE(e.partial().evaluations, 300u);
  }
}

TEST(IntegrateDecaying, ExponentialAndAlgebraicTails) {
  EXPECT_NEAR(quad::integrate_decaying([](double t) { return std::exp(-t); }, 0.0, 1e-12).value,
              1.0, 1e-12);
  EXPECT_NEAR(quad::integrate_decaying([](double t) { return std::exp(-t * t); }, 0.0, 1e-12).value,
              0.5 * std::sqrt(std::numbers::pi), 1e-12);
}

TEST(IntegrateDecaying, GrowingIntegrandIsReported) {
  EXPECT_THROW(quad::integrate_decaying([](double t) { return std::exp(0.1 * t); }, 0.0, 1e-10),
               quad::QuadratureError);
}

TEST(LogIntegrate, LargeExponentsStayFinite) {
  // log int_0^1 e^{k(-(t - 0.4)^2) + 3k} dt with k = 4000: e^{12000} overflows.
  const double k = 4000.0;
  const auto r =
      quad::log_integrate([k](double t) { return -k * (t - 0.4) * (t - 0.4) + 3.0 * k; }, 0.0, 1.0, 1e-12);
  const double ref = 3.0 * k + std::log(std::sqrt(std::numbers::pi / k));
  EXPECT_NEAR(r.log_value, ref, 1e-10);
}

TEST(LogIntegrate, MatchesDirectIntegrationWhereBothWork) {
  auto g = [](double t) { return std::sin(3.0 * t) - t * t; };
  const auto lr = quad::log_integrate(g, -1.0, 2.0, 1e-13);
  const auto dr = quad::integrate([&](double t) { return std::exp(g(t)); }, -1.0, 2.0, 1e-13);
  EXPECT_NEAR(lr.log_value, std::log(dr.value), 1e-12);
}

TEST(LogIntegrate, SharpPeakBetweenSamples) {
  // Peak width 1e-4, far below the 1/512 sampling grid.
  const double c = 0.123456789;
  const auto r = quad::log_integrate([c](double t) { return -1e8 * (t - c) * (t - c); }, 0.0, 1.0, 1e-10);
  EXPECT_NEAR(r.log_value, std::log(std::sqrt(std::numbers::pi / 1e8)), 1e-8);
}

TEST(LogIntegrate, MinusInfinityEverywhereThrows) {
  EXPECT_THROW(quad::log_integrate([](double) { return -INFINITY; }, 0.0, 1.0, 1e-10), NumericError);
}

class GaussLegendreExactness : public ::testing::TestWithParam<int> {};

TEST_P(GaussLegendreExactness, IntegratesDegreeUpTo2nMinus1) {
  const int n = GetParam();
  const auto rule = quad::gauss_legendre_unit(n);
  ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
  for (int p = 0; p < 2 * n; ++p) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
    EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " degree " << p;
  }
  for (int i = 0; i < n; ++i) {
    EXPECT_GT(rule.nodes[i], 0.0);
    EXPECT_LT(rule.nodes[i], 1.0);
    EXPECT_GT(rule.weights[i], 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Orders, GaussLegendreExactness, ::testing::Values(1, 2, 5, 8, 16, 24));

TEST(Integrate, TightRelativeToleranceTerminates) {
  const auto r = quad::integrate([](double t) { return std::exp(-t); }, 0.0, 5.0, 1e-16);
  EXPECT_NEAR(r.value, 1.0 - std::exp(-5.0), 1e-15);
}
