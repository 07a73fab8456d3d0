#include "ood/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ood/diagnostics.hpp"
#include "ood/error.hpp"

namespace ood {

double logsumexp(std::span<const double> z) {
  if (z.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(z.begin(), z.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return m + std::log(sum);
}

void softmax(std::span<const double> z, std::span<double> out) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
}

std::size_t argmax(std::span<const double> z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i] > z[best]) best = i;
  return best;
}

void require_finite(const Matrix& m, std::string_view what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c)))
        throw ValidationError(std::string(what) + ": non-finite value at row " + std::to_string(r) +
                              ", column " + std::to_string(c));
    }
  }
}

LogitMatrix logits_from_features(const FeatureMatrix& features, const ClassifierHead& head) {
  if (features.dim() != head.dim())
    throw ValidationError("feature width " + std::to_string(features.dim()) +
                          " does not match head width " + std::to_string(head.dim()));
  if (static_cast<std::size_t>(head.bias.size()) != head.classes())
    throw ValidationError("head bias length does not match its weight rows");
  LogitMatrix out;
  out.values.noalias() = features.values * head.weight.transpose();
  out.values.rowwise() += head.bias.transpose();
  return out;
}

double logit_consistency(const LogitMatrix& exported, const FeatureMatrix& features,
                         const ClassifierHead& head, double warn_above) {
  const auto recomputed = logits_from_features(features, head);
  if (recomputed.values.rows() != exported.values.rows() || recomputed.values.cols() != exported.values.cols())
    throw ValidationError("exported logits and recomputed logits differ in shape");
  const double diff = exported.values.size() == 0 ? 0.0 : (exported.values - recomputed.values).cwiseAbs().maxCoeff();
  if (diff > warn_above)
    warn("exported logits differ from W f + b by up to " + std::to_string(diff));
  return diff;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace ood
