#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ood/artifacts.hpp"
#include "ood/detector.hpp"
#include "ood/report.hpp"
#include "ood/run_config.hpp"
#include "ood/scoring.hpp"

namespace ood {

/// Every (method, hyperparameter) combination the config asks for, in
/// config order; ReAct expands over its tau list, DICE over its rho list.
std::vector<MethodTag> method_variants(const RunConfig& config,
                                       const CalibrationArtifacts& artifacts);

/// Dispatches to the matching score_* function.
ScoreVector score_with(const MethodTag& tag, const RunConfig& config,
                       const CalibrationArtifacts& artifacts, const FeatureMatrix& features,
                       const LogitMatrix& logits);

std::filesystem::path artifact_dir(const RunConfig& config);
std::filesystem::path report_dir(const RunConfig& config);

/// Fits calibration artifacts on the manifest's ID training split and
/// writes them to <output_dir>/artifacts.
CalibrationArtifacts cmd_fit(const RunConfig& config);

/// Scores the ID test split and every OOD set with every method variant,
/// calibrates lambda per variant, and writes cells.tsv, report.txt,
/// chart.svg, sweep_summary.tsv and thresholds.tsv to <output_dir>/report.
EvalReport cmd_eval(const RunConfig& config);

struct ScoreRequest {
  /// "id_test", "id_train" or an OOD set name from the manifest.
  std::string split = "id_test";
  /// Pass an explicit lambda instead of calibrating on the ID test split.
  std::optional<double> lambda;
};

/// Scores one split and writes <output_dir>/scores/<split>/<method>.npy plus
/// detections.tsv with thresholded in/out decisions for every variant.
std::vector<ScoreVector> cmd_score(const RunConfig& config, const ScoreRequest& request);

/// Re-renders text table, chart and sweep summary from a cells.tsv file.
EvalReport cmd_report(const std::filesystem::path& cells_tsv, const std::filesystem::path& out_dir);

}  // namespace ood
