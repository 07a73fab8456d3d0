#pragma once

#include <span>

#include "ood/scoring.hpp"

namespace ood {

/// Fraction of OOD scores at or above the detector's cutoff for `target_tpr`
/// on the ID scores (ID is the positive class).
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double target_tpr = 0.95);
double fpr_at_tpr(const ScoreVector& id_scores, const ScoreVector& ood_scores,
                  double target_tpr = 0.95);

/// Mann-Whitney estimate of P(id > ood) + 0.5 P(id == ood), computed from a
/// single sort with mid-ranks.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);
double auroc(const ScoreVector& id_scores, const ScoreVector& ood_scores);

}  // namespace ood
