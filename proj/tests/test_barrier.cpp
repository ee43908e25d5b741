#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ipoc/barrier.hpp"
#include "ipoc/errors.hpp"

using namespace ipoc;

TEST(Psi, UnitPoint) {
  const BarrierEval b = psi_eval(-1.0);
  EXPECT_TRUE(b.finite());
  EXPECT_DOUBLE_EQ(b.value, 0.0);
  EXPECT_DOUBLE_EQ(b.first, 1.0);
  EXPECT_DOUBLE_EQ(b.second, 1.0);
}

TEST(Psi, HalfPoint) {
  const BarrierEval b = psi_eval(-0.5);
  EXPECT_NEAR(b.value, 0.6931472, 1e-7);
  EXPECT_DOUBLE_EQ(b.first, 2.0);
  EXPECT_DOUBLE_EQ(b.second, 4.0);
}

TEST(Psi, InfiniteOutsideDomain) {
  for (double x : {0.0, 1e-300, 0.5, 7.0}) {
    const BarrierEval b = psi_eval(x);
    EXPECT_FALSE(b.finite());
    EXPECT_EQ(b.value, std::numeric_limits<double>::infinity());
    EXPECT_TRUE(std::isnan(b.first));
    EXPECT_TRUE(std::isnan(b.second));
  }
}

TEST(Psi, RejectsNonFinite) {
  EXPECT_THROW(psi_eval(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
  EXPECT_THROW(psi_eval(-std::numeric_limits<double>::infinity()), InvalidArgument);
  EXPECT_THROW(psi_eval(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(Psi, FirstDerivativePositiveAndIncreasing) {
  double prev = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = -10.0 + k * (10.0 - 1e-3) / 1000.0;
    const double d = psi_eval(x).first;
    EXPECT_GT(d, 0.0);
    if (k > 0) EXPECT_GT(d, prev) << "at x = " << x;
    prev = d;
  }
}

TEST(Psi, DerivativesMatchFiniteDifferences) {
  for (int k = 0; k <= 200; ++k) {
    const double x = -10.0 * std::pow(1e-3, k / 200.0);  // log grid on [-10, -1e-2]
    const double h = 1e-6 * std::abs(x);
    const double fd1 = (psi_eval(x + h).value - psi_eval(x - h).value) / (2.0 * h);
    const double fd2 = (psi_eval(x + h).first - psi_eval(x - h).first) / (2.0 * h);
    EXPECT_NEAR(fd1, psi_eval(x).first, 1e-6) << "x = " << x;
    EXPECT_NEAR(fd2, psi_eval(x).second, 1e-6 * psi_eval(x).second) << "x = " << x;
    EXPECT_DOUBLE_EQ(psi_prime(x), psi_eval(x).first);
  }
}

TEST(FischerBurmeister, Examples) {
  EXPECT_NEAR(fb_eval(1.0, -1.0, 1.0).value, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(fb_value(0.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(fb_eval(3.0, -2.0, 0.0).value, 5.0 - std::sqrt(13.0), 1e-15);
  EXPECT_NEAR(fb_eval(3.0, -2.0, 0.0).value, 1.3944487, 1e-7);
}

TEST(FischerBurmeister, OriginPartialsAreSingular) {
  EXPECT_THROW(fb_eval(0.0, 0.0, 0.0), SingularityError);
  EXPECT_NO_THROW(fb_eval(0.0, 0.0, 1e-12));
}

TEST(FischerBurmeister, NegativeEpsRejected) {
  EXPECT_THROW(fb_eval(1.0, -1.0, -1e-3), InvalidArgument);
  EXPECT_THROW(fb_value(1.0, -1.0, -1e-3), InvalidArgument);
}

TEST(FischerBurmeister, RootSetIsPerturbedComplementarity) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> logu(-3.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double lambda = std::pow(10.0, logu(rng));
    const double g = -std::pow(10.0, logu(rng));
    const double eps = -lambda * g;
    EXPECT_NEAR(fb_eval(lambda, g, eps).value, 0.0, 1e-12 * (1.0 + lambda - g));
  }
  std::uniform_real_distribution<double> any(-5.0, 5.0);
  std::uniform_real_distribution<double> epsd(0.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = any(rng), y = any(rng), eps = epsd(rng);
    const bool on_root_set = x >= 0.0 && y <= 0.0 && std::abs(x * y + eps) < 1e-9;
    if (!on_root_set) EXPECT_NE(fb_value(x, y, eps), 0.0);
  }
}

TEST(FischerBurmeister, PartialsMatchFiniteDifferences) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> any(-3.0, 3.0);
  std::uniform_real_distribution<double> epsd(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double x = any(rng), y = any(rng), eps = epsd(rng);
    if (x * x + y * y + 2.0 * eps < 1e-2) continue;
    const double h = 1e-6;
    const FbEval e = fb_eval(x, y, eps);
    EXPECT_NEAR(e.value, x - y - std::sqrt(x * x + y * y + 2.0 * eps), 1e-14);
    EXPECT_NEAR(e.dx, (fb_value(x + h, y, eps) - fb_value(x - h, y, eps)) / (2.0 * h), 1e-6);
    EXPECT_NEAR(e.dy, (fb_value(x, y + h, eps) - fb_value(x, y - h, eps)) / (2.0 * h), 1e-6);
  }
}
