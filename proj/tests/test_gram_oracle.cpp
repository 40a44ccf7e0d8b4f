#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pbk/gram_oracle.hpp"
#include "pbk/model_exact.hpp"
#include "pbk/quadrature.hpp"

using namespace pbk;

TEST(GramOracle, ModelNormsAreIncompleteGammaValues) {
  // ||z^n||^2 = int_0^1 y^n e^{-k y} dy = n! P(Poisson(k) >= n + 1) / k^{n+1}.
  const auto p = bargmann_fock();
  for (int k : {20, 100, 400}) {
    for (long n : {0L, 1L, 5L, long(k / 4), long(k / 2), long(0.9 * k)}) {
      const double ref = std::lgamma(n + 1.0) + std::log(oracle::poisson_tail(n + 1, k)) -
                         (n + 1) * std::log(double(k));
      EXPECT_NEAR(log_monomial_norm_sq(p, n, k), ref, 1e-10) << "k=" << k << " n=" << n;
    }
  }
}

TEST(GramOracle, PerturbedNormAgainstSimpson) {
  const auto p = perturbed({0.1});
  const int k = 30;
  for (long n : {0L, 3L, 12L}) {
    const double ref = oracle::simpson(
        [&](double t) { return std::exp(2.0 * n * t - 2.0 * k * p.phi(t)) * p.phi_tt(t); }, -18.0, 0.0,
        200000);
    EXPECT_NEAR(monomial_norm_sq(p, n, k), ref, 1e-10 * ref);
  }
}

TEST(GramOracle, NormsAreLogConvexInDegree) {
  for (const char* spec : {"model", "perturbed:0.1"}) {
    const auto p = parse_potential(spec);
    const int k = 100;
    std::vector<double> ln;
    for (long n = 0; n <= 120; ++n) ln.push_back(log_monomial_norm_sq(p, n, k));
    for (std::size_t n = 1; n + 1 < ln.size(); ++n) {
      EXPECT_GE(ln[n - 1] + ln[n + 1] - 2 * ln[n], -1e-10) << spec << " n=" << n;
    }
  }
}

class DimensionSum : public ::testing::TestWithParam<const char*> {};

TEST_P(DimensionSum, IntegralOfDensityCountsMonomials) {
  DualPotential d(parse_potential(GetParam()));
  const int k = 40;
  for (double eps : {0.0, 0.25}) {
    GramOracle g(d, k, eps, default_n_max(d.a(), k));
    quad::Options opts;
    opts.breakpoints = {0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
    const double total = quad::integrate([&](double x) { return g.pdf(x); }, d.x_floor(), d.a(), 1e-11, opts).value;
    const double count = static_cast<double>(g.n_max() - g.n_lo() + 1);
    // The part of the n = 0 weight below x_floor is invisible to the x-integral.
    EXPECT_NEAR(total, count, 1e-6) << GetParam() << " eps=" << eps;
  }
}

INSTANTIATE_TEST_SUITE_P(Potentials, DimensionSum, ::testing::Values("model", "perturbed:0.1"));

TEST(GramOracle, ModelDensityMatchesPoissonTailAwayFromBoundary) {
  DualPotential d(bargmann_fock());
  const int k = 200;
  GramOracle g(d, k, 0.25, default_n_max(d.a(), k));
  for (double x : {0.1, 0.2, 0.25, 0.3, 0.4}) {
    EXPECT_NEAR(g.pdf(x) / k, model_pdf({k, 0.25, x}), 1e-9) << x;
  }
}

TEST(GramOracle, TruncationAndThreshold) {
  DualPotential d(bargmann_fock());
  GramOracle g(d, 100, 0.25, 90);
  EXPECT_EQ(g.n_lo(), 25);
  EXPECT_EQ(g.n_max(), 90);
  EXPECT_EQ(default_n_max(1.0, 100), 90);
  EXPECT_EQ(default_n_max(1.3, 100, 1.0), 115);
  EXPECT_THROW(GramOracle(d, 100, 0.25, 10), DomainError);
  EXPECT_THROW(GramOracle(d, 0, 0.25, 10), DomainError);
}

TEST(GramOracle, ProfileCarriesLogValuesAndCompares) {
  DualPotential d(bargmann_fock());
  GramOracle g(d, 100, 0.25, 90);
  const std::vector<double> xs{0.05, 0.1, 0.3};
  const auto p = g.profile(xs);
  p.validate();
  ASSERT_EQ(p.log_value.size(), 3u);
  EXPECT_NEAR(std::exp(p.log_value[0]), p.value[0], 1e-15 * p.value[0] + 1e-300);
  EXPECT_LT(p.log_value[0], -15.0);
  EXPECT_NEAR(exact_pdf(bargmann_fock(), 100, 0.25, 90, 0.3), p.value[2], 1e-12 * p.value[2]);

  auto q = p;
  q.value[1] *= 1.5;
  const auto rep = compare(q, p);
  EXPECT_EQ(rep.argmax_index, 1u);
  EXPECT_DOUBLE_EQ(rep.argmax_x, 0.1);
  EXPECT_NEAR(rep.sup_rel, 0.5, 1e-12);
  EXPECT_NEAR(rep.sup_abs_scaled, rep.sup_abs / 100, 1e-18);

  auto r = p;
  r.x[1] = 0.11;
  EXPECT_THROW(compare(r, p), DomainError);
}
