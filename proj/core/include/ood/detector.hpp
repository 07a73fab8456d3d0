#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ood/scoring.hpp"
#include "ood/types.hpp"

namespace ood {

struct Threshold {
  double lambda = 0.0;
  double target_tpr = 0.95;
  MethodTag tag;
  std::size_t calibration_count = 0;
};

enum class Decision { in, out };

struct Detection {
  Decision decision = Decision::out;
  /// Empty means "unknown"; set exactly when decision == in.
  std::optional<std::size_t> predicted_label;
  double score = 0.0;
};

/// Order-statistic cutoff: lambda is the k-th smallest ID score with
/// k = N - ceil(target_tpr * N) + 1, so at least target_tpr of the ID scores
/// satisfy score >= lambda.
Threshold calibrate_threshold(const ScoreVector& id_scores, double target_tpr = 0.95);
double calibrate_lambda(std::span<const double> id_scores, double target_tpr);

/// "in" iff score >= lambda; accepted samples get the argmax class.
std::vector<Detection> detect(const ScoreVector& scores, const LogitMatrix& logits,
                              const Threshold& threshold);

/// Tab-separated table: sample_index, method, score, decision, predicted_label.
void write_detections(std::ostream& out, const std::vector<Detection>& detections,
                      const MethodTag& tag, bool header = true);

}  // namespace ood
