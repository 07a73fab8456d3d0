#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ood/calibration.hpp"
#include "ood/types.hpp"

namespace ood {

/// Which components to fit and with what hyperparameters.
struct FitOptions {
  bool gaussian = false;
  double shrinkage = 1e-6;

  bool weibull = false;
  std::size_t tail_size = 20;
  WeibullVariable weibull_variable = WeibullVariable::distance;

  bool templates = false;
  double template_epsilon = 1e-12;
  TemplateGrouping template_grouping = TemplateGrouping::predicted;

  bool vim = false;
  /// 0 selects d / 2.
  std::size_t principal_dim = 0;

  std::vector<double> dice_rho;
  std::vector<double> react_tau;
  std::vector<double> react_percentiles;
};

/// Everything the scoring methods need from the training split. Built once
/// by `calibrate` and treated as immutable afterwards.
struct CalibrationArtifacts {
  ClassifierHead head;
  std::optional<GaussianStats> gaussian;
  std::optional<WeibullTails> weibull;
  std::optional<PosteriorTemplates> templates;
  std::optional<VimSubspace> vim;
  std::vector<DiceMask> dice;
  std::vector<ReactThreshold> react;
  FitOptions options;

  std::size_t train_samples = 0;
  /// Fraction of training rows whose argmax logit equals the label.
  double train_accuracy = 0.0;
};

CalibrationArtifacts calibrate(const FeatureMatrix& features, const LogitMatrix& logits,
                               const Labels& labels, const ClassifierHead& head,
                               const FitOptions& options);

/// Writes one .npy per array plus `index.json` (hyperparameters, scalar
/// fields and SHA-256 of every array file). Output is byte-deterministic.
void save_artifacts(const CalibrationArtifacts& artifacts, const std::filesystem::path& dir);

/// Reads a directory written by save_artifacts, verifying content hashes.
CalibrationArtifacts load_artifacts(const std::filesystem::path& dir);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ood
