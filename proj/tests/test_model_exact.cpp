#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pbk/model_exact.hpp"

using namespace pbk;

TEST(ModelExact, PoissonTailAgainstIndependentSum) {
  for (int k : {10, 100, 400, 1600}) {
    for (double x : {0.05, 0.2, 0.25, 0.3, 0.45, 0.9}) {
      const ModelQuery q{k, 0.25, x};
      const double ref = oracle::poisson_tail(q.vanishing_order(), k * x);
      EXPECT_NEAR(model_pdf(q), ref, 1e-12 + 1e-10 * ref) << "k=" << k << " x=" << x;
    }
  }
}

TEST(ModelExact, GammaAndDirectRoutesAgree) {
  for (int k : {50, 200, 800}) {
    for (double x = 0.02; x < 1.0; x += 0.07) {
      const ModelQuery q{k, 0.3, x};
      EXPECT_NEAR(model_pdf(q), model_pdf_direct(q), 1e-12);
    }
  }
}

TEST(ModelExact, Limits) {
  EXPECT_EQ(model_pdf({100, 0.0, 0.3}), 1.0);
  EXPECT_EQ(model_pdf({100, 0.25, 0.0}), 0.0);
  EXPECT_NEAR(model_pdf({100, 0.25, 10.0}), 1.0, 1e-15);
}

TEST(ModelExact, MonotoneInX) {
  double prev = 0.0;
  for (double x = 0.01; x < 1.0; x += 0.01) {
    const double v = model_pdf({300, 0.25, x});
    EXPECT_GE(v, prev);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(ModelExact, ThresholdOverride) {
  ModelQuery q{100, 0.0, 0.2};
  q.threshold = 25;
  EXPECT_NEAR(model_pdf(q), oracle::poisson_tail(25, 20.0), 1e-13);
}

TEST(ModelExact, LeadingLawAgainstErfSeries) {
  const ModelQuery q{400, 0.25, 0.27};
  EXPECT_NEAR(model_pdf_leading(q), oracle::normal_cdf(20.0 * 0.02 / std::sqrt(0.27)), 1e-14);
  EXPECT_DOUBLE_EQ(model_pdf_leading({400, 0.25, 0.25}), 0.5);
}

TEST(ModelExact, LeadingErrorHalvesPerFourfoldK) {
  auto sup_err = [](int k) {
    double s = 0.0;
    for (double xi = -3.0; xi <= 3.0; xi += 0.01) {
      const double x = 0.25 + xi / std::sqrt(double(k));
      if (x <= 0.0) continue;
      const ModelQuery q{k, 0.25, x};
      s = std::max(s, std::abs(model_pdf(q) - model_pdf_leading(q)));
    }
    return s;
  };
  const double e1 = sup_err(100), e2 = sup_err(400), e3 = sup_err(1600);
  EXPECT_NEAR(e1 / e2, 2.0, 0.3);
  EXPECT_NEAR(e2 / e3, 2.0, 0.3);
}

TEST(ModelExact, Validation) {
  EXPECT_THROW(model_pdf({0, 0.25, 0.3}), DomainError);
  EXPECT_THROW(model_pdf({10, -0.1, 0.3}), DomainError);
  EXPECT_THROW(model_pdf({10, 0.1, -0.3}), DomainError);
  EXPECT_THROW(model_pdf_leading({10, 0.1, 0.0}), DomainError);
}
