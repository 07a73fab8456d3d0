#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "ood/error.hpp"
#include "ood/weibull.hpp"

using namespace ood;

TEST(Weibull, RecoversGeneratingParameters) {
  ood::testing::Rng rng(2024);
  std::vector<double> x(10000);
  for (auto& v : x) v = rng.weibull(2.0, 1.5);
  const auto fit = fit_weibull_mle(x);
  EXPECT_FALSE(fit.clamped);
  EXPECT_NEAR(fit.scale, 2.0, 0.03 * 2.0);
  EXPECT_NEAR(fit.shape, 1.5, 0.03 * 1.5);
}

TEST(Weibull, SatisfiesLikelihoodEquations) {
  ood::testing::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double scale = rng.uniform(0.1, 50.0), shape = rng.uniform(0.3, 8.0);
    std::vector<double> x(200 + rng.below(500));
    for (auto& v : x) v = rng.weibull(scale, shape);
    const auto fit = fit_weibull_mle(x);
    const double k = fit.shape;
    long double s0 = 0, s1 = 0, mean_log = 0;
    for (double v : x) {
      s0 += std::pow(static_cast<long double>(v), k);
      s1 += std::pow(static_cast<long double>(v), k) * std::log(static_cast<long double>(v));
      mean_log += std::log(static_cast<long double>(v));
    }
    mean_log /= x.size();
    EXPECT_NEAR(static_cast<double>(s1 / s0 - 1.0L / k - mean_log), 0.0, 1e-9);
    EXPECT_NEAR(fit.scale, static_cast<double>(std::pow(s0 / x.size(), 1.0L / k)), 1e-9 * fit.scale);
  }
}

TEST(Weibull, ConstantTailClampsShape) {
  const std::vector<double> x(25, 3.25);
  const auto fit = fit_weibull_mle(x);
  EXPECT_TRUE(fit.clamped);
  EXPECT_EQ(fit.shape, 50.0);
  EXPECT_DOUBLE_EQ(fit.scale, 3.25);
}

TEST(Weibull, SingleSampleBehavesLikeConstant) {
  const auto fit = fit_weibull_mle(std::vector<double>{0.4});
  EXPECT_TRUE(fit.clamped);
  EXPECT_DOUBLE_EQ(fit.scale, 0.4);
}

TEST(Weibull, HugeAndTinyMagnitudesStayFinite) {
  ood::testing::Rng rng(8);
  for (double scale : {1e-200, 1e200}) {
    std::vector<double> x(500);
    for (auto& v : x) v = rng.weibull(scale, 2.0);
    const auto fit = fit_weibull_mle(x);
    EXPECT_TRUE(std::isfinite(fit.scale));
    EXPECT_NEAR(fit.scale / scale, 1.0, 0.1);
    EXPECT_NEAR(fit.shape, 2.0, 0.3);
  }
}

TEST(Weibull, NoPositiveSamples) {
  EXPECT_THROW(fit_weibull_mle(std::vector<double>{0.0, -1.0}), ValidationError);
}

TEST(Weibull, IterationCapIsEnforced) {
  ood::testing::Rng rng(9);
  std::vector<double> x(100);
  for (auto& v : x) v = rng.weibull(1.0, 3.0);
  WeibullFitOptions opts;
  opts.max_iterations = 1;
  EXPECT_THROW(fit_weibull_mle(x, opts), NumericalError);
}

TEST(Weibull, CdfValues) {
  EXPECT_EQ(weibull_cdf(0.0, 1.0, 2.0), 0.0);
  EXPECT_EQ(weibull_cdf(-3.0, 1.0, 2.0), 0.0);
  EXPECT_NEAR(weibull_cdf(1.0, 1.0, 2.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(weibull_cdf(2.0, 2.0, 0.5), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_EQ(weibull_cdf(1e6, 1.0, 2.0), 1.0);
}
