#include "ood/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "ood/error.hpp"
#include "ood/numeric.hpp"

namespace ood {

double calibrate_lambda(std::span<const double> id_scores, double target_tpr) {
  if (id_scores.empty()) throw ValidationError("cannot calibrate a threshold on an empty score vector");
  if (!(target_tpr > 0.0 && target_tpr < 1.0)) throw ValidationError("target TPR must lie in (0, 1)");
  const auto n = id_scores.size();
  // the small slack keeps 0.95 * 100 from rounding up to 96 accepted samples
  const auto accepted = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(n) - 1e-9));
  const std::size_t k = n - std::min(accepted, n) + 1;  // 1-based order statistic
  std::vector<double> sorted(id_scores.begin(), id_scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

Threshold calibrate_threshold(const ScoreVector& id_scores, double target_tpr) {
  Threshold t;
  t.lambda = calibrate_lambda(id_scores.scores, target_tpr);
  t.target_tpr = target_tpr;
  t.tag = id_scores.tag;
  t.calibration_count = id_scores.size();
  return t;
}

std::vector<Detection> detect(const ScoreVector& scores, const LogitMatrix& logits, const Threshold& threshold) {
  if (scores.size() != logits.samples())
    throw ValidationError("detect: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(logits.samples()) + " logit rows");
  std::vector<Detection> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& d = out[i];
    d.score = scores.scores[i];
    if (d.score >= threshold.lambda) {
      d.decision = Decision::in;
      d.predicted_label = argmax(row_span(logits.values, static_cast<Eigen::Index>(i)));
    }
  }
  return out;
}

void write_detections(std::ostream& out, const std::vector<Detection>& detections, const MethodTag& tag,
                      bool header) {
  if (header) out << "sample_index\tmethod\tscore\tdecision\tpredicted_label\n";
  const auto label = tag.label();
  char buf[40];
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    std::snprintf(buf, sizeof buf, "%.17g", d.score);
    out << i << '\t' << label << '\t' << buf << '\t' << (d.decision == Decision::in ? "in" : "out") << '\t';
    if (d.predicted_label) {
      out << *d.predicted_label;
    } else {
      out << "unknown";
    }
    out << '\n';
  }
}

}  // namespace ood
