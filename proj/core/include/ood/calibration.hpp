#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ood/types.hpp"

namespace ood {

/// Class means and the inverse of the shared (tied) covariance.
struct GaussianStats {
  Matrix means;      // C x d
  Matrix precision;  // d x d, inverse of the shrunk pooled covariance
  double shrinkage = 0.0;
};

/// How OpenMax tails are parameterised. `distance` fits/evaluates on
/// ||f - mav_i||; `logit` fits on the class's own top logits and evaluates
/// the CDF at z_i.
enum class WeibullVariable { distance, logit };

struct WeibullTails {
  Matrix mav;                       // C x d mean activation vectors
  std::vector<double> scale;        // lambda_i
  std::vector<double> shape;        // k_i
  std::vector<std::size_t> tail_count;  // values actually used per class
  std::vector<bool> clamped;
  std::size_t tail_size = 0;        // requested eta
  WeibullVariable variable = WeibullVariable::distance;
};

enum class TemplateGrouping { predicted, label };

struct PosteriorTemplates {
  Matrix q;  // C x C, row c is the template of class c
  double epsilon = 0.0;
  TemplateGrouping grouping = TemplateGrouping::predicted;
};

struct VimSubspace {
  Vector offset;          // o = -pinv(W) b, length d
  Matrix residual_basis;  // d x (d - principal_dim), orthonormal columns
  double alpha = 0.0;
  std::size_t principal_dim = 0;
};

struct DiceMask {
  Matrix mask;  // C x d, entries 0 or 1
  double rho = 0.0;
  Vector mean_activation;
};

struct ReactThreshold {
  double tau = 0.0;
  /// Set when tau was derived from a training-activation quantile.
  std::optional<double> percentile;
};

GaussianStats fit_gaussian(const FeatureMatrix& features, const Labels& labels,
                           std::size_t num_classes, double shrinkage = 1e-6);

WeibullTails fit_weibull_tails(const FeatureMatrix& features, const LogitMatrix& logits,
                               const Labels& labels, std::size_t tail_size = 20,
                               WeibullVariable variable = WeibullVariable::distance);

/// `labels` is only consulted for TemplateGrouping::label.
PosteriorTemplates fit_templates(const LogitMatrix& logits, double epsilon = 1e-12,
                                 TemplateGrouping grouping = TemplateGrouping::predicted,
                                 const Labels* labels = nullptr);

VimSubspace fit_vim(const FeatureMatrix& features, const ClassifierHead& head,
                    std::size_t principal_dim);

DiceMask fit_dice_mask(const FeatureMatrix& features, const ClassifierHead& head, double rho);

/// Quantile of all training activation entries pooled together.
double fit_react_threshold(const FeatureMatrix& features, double percentile);

/// Raises every entry of the probability vector `p` to at least `floor`
/// while keeping the sum at one, by rescaling only the entries above the
/// floor. Requires floor * size <= 1.
void clamp_probabilities(std::span<double> p, double floor);

}  // namespace ood
