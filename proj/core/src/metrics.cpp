#include "ood/metrics.hpp"

#include <algorithm>
#include <vector>

#include "ood/detector.hpp"
#include "ood/error.hpp"

namespace ood {

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double target_tpr) {
  if (id_scores.empty() || ood_scores.empty()) throw ValidationError("fpr_at_tpr needs non-empty score sets");
  const double lambda = calibrate_lambda(id_scores, target_tpr);
  const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(), [&](double s) { return s >= lambda; });
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

double fpr_at_tpr(const ScoreVector& id_scores, const ScoreVector& ood_scores, double target_tpr) {
  return fpr_at_tpr(id_scores.scores, ood_scores.scores, target_tpr);
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) throw ValidationError("auroc needs non-empty score sets");
  struct Entry {
    double score;
    bool id;
  };
  std::vector<Entry> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.push_back({s, true});
  for (double s : ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Twice the Mann-Whitney U for the ID side, kept integral: each ID sample
  // beats every OOD sample strictly below it and ties count one half.
  std::uint64_t twice_u = 0;
  std::uint64_t ood_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::uint64_t id_in_block = 0, ood_in_block = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].id ? id_in_block : ood_in_block) += 1;
      ++j;
    }
    twice_u += id_in_block * (2 * ood_below + ood_in_block);
    ood_below += ood_in_block;
    i = j;
  }
  const double pairs = static_cast<double>(id_scores.size()) * static_cast<double>(ood_scores.size());
  return static_cast<double>(twice_u) / (2.0 * pairs);
}

double auroc(const ScoreVector& id_scores, const ScoreVector& ood_scores) {
  return auroc(id_scores.scores, ood_scores.scores);
}

}  // namespace ood
