#pragma once

#include <cstddef>
#include <span>

namespace ood {

struct WeibullFit {
  double scale = 0.0;  // lambda
  double shape = 0.0;  // k
  std::size_t iterations = 0;
  /// The likelihood optimum lies outside [min_shape, max_shape] and the shape
  /// was clamped (constant tails land here).
  bool clamped = false;
};

struct WeibullFitOptions {
  double min_shape = 0.05;
  double max_shape = 50.0;
  std::size_t max_iterations = 200;
  double tolerance = 1e-12;
};

/// Two-parameter maximum-likelihood fit. The shape equation
///   sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x) = 0
/// is solved by Newton's method safeguarded with bisection on a sign
/// bracket; the scale then follows in closed form. Non-positive samples are
/// ignored. Throws ValidationError if no positive sample remains and
/// NumericalError if the iteration cap is hit.
WeibullFit fit_weibull_mle(std::span<const double> samples, const WeibullFitOptions& options = {});

/// 1 - exp(-(x / scale)^shape) for x > 0, else 0.
double weibull_cdf(double x, double scale, double shape);

}  // namespace ood
