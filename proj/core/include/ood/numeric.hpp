#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ood/types.hpp"

namespace ood {

// All softmax / log-sum-exp evaluations subtract the row maximum first.

double logsumexp(std::span<const double> z);

/// Softmax of z into `out` (same length).
void softmax(std::span<const double> z, std::span<double> out);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> z);

/// Rejects NaN/Inf entries, naming the first offending row.
void require_finite(const Matrix& m, std::string_view what);

/// logits = features * W^T + b, row by row.
LogitMatrix logits_from_features(const FeatureMatrix& features, const ClassifierHead& head);

/// Largest absolute entrywise difference between exported and recomputed
/// logits. Emits a warning when it exceeds `warn_above`.
double logit_consistency(const LogitMatrix& exported, const FeatureMatrix& features,
                         const ClassifierHead& head, double warn_above = 1e-3);

/// Linear-interpolation quantile of `values` (sorted internally), q in [0, 1].
double quantile(std::vector<double> values, double q);

inline std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace ood
