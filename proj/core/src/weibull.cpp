#include "ood/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ood/error.hpp"

namespace ood {
namespace {

// Shape-equation residual and its derivative for samples already divided by
// their maximum (so y <= 1 and y^k never overflows).
struct ShapeEquation {
  std::span<const double> log_y;
  double mean_log = 0.0;

  void eval(double k, double& g, double& dg) const {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (double l : log_y) {
      const double w = std::exp(k * l);
      s0 += w;
      s1 += w * l;
      s2 += w * l * l;
    }
    const double ratio = s1 / s0;
    g = ratio - 1.0 / k - mean_log;
    dg = s2 / s0 - ratio * ratio + 1.0 / (k * k);
  }
};

}  // namespace

double weibull_cdf(double x, double scale, double shape) {
  if (!(x > 0.0)) return 0.0;
  return -std::expm1(-std::pow(x / scale, shape));
}

WeibullFit fit_weibull_mle(std::span<const double> samples, const WeibullFitOptions& options) {
  std::vector<double> positive;
  positive.reserve(samples.size());
  for (double v : samples)
    if (v > 0.0 && std::isfinite(v)) positive.push_back(v);
  if (positive.empty()) throw ValidationError("Weibull fit needs at least one positive sample");

  const double top = *std::max_element(positive.begin(), positive.end());
  std::vector<double> log_y(positive.size());
  double mean_log = 0.0;
  for (std::size_t i = 0; i < positive.size(); ++i) {
    log_y[i] = std::log(positive[i] / top);
    mean_log += log_y[i];
  }
  mean_log /= static_cast<double>(positive.size());

  const ShapeEquation eq{log_y, mean_log};
  WeibullFit fit;

  // g is increasing in k: a sign change inside the bracket is the MLE.
  double lo = options.min_shape, hi = options.max_shape, g = 0.0, dg = 0.0;
  double g_lo = 0.0, g_hi = 0.0;
  eq.eval(lo, g_lo, dg);
  eq.eval(hi, g_hi, dg);
  double k = 0.0;
  if (g_hi <= 0.0) {
    k = hi;
    fit.clamped = g_hi < 0.0;
  } else if (g_lo >= 0.0) {
    k = lo;
    fit.clamped = g_lo > 0.0;
  } else {
    k = 1.0;
    if (k <= lo || k >= hi) k = 0.5 * (lo + hi);
    bool converged = false;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
      fit.iterations = it;
      eq.eval(k, g, dg);
      if (g == 0.0) {
        converged = true;
        break;
      }
      if (g < 0.0) {
        lo = k;
      } else {
        hi = k;
      }
      double next = k - g / dg;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double step = std::abs(next - k);
      k = next;
      if (step <= options.tolerance * k || hi - lo <= options.tolerance * k) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NumericalError("Weibull shape iteration did not converge in " +
                           std::to_string(options.max_iterations) + " iterations");
  }

  double s0 = 0.0;
  for (double l : log_y) s0 += std::exp(k * l);
  fit.shape = k;
  fit.scale = top * std::pow(s0 / static_cast<double>(positive.size()), 1.0 / k);
  return fit;
}

}  // namespace ood
