#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "ood/artifacts.hpp"
#include "ood/scoring.hpp"

namespace ood {

enum class ThresholdSplit { id_test, holdout };

/// Experiment configuration, normally read from JSON. See docs/formats.md.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "oodbench-out";
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};

  double odin_temperature = 1000.0;

  std::size_t openmax_tail_size = 20;
  std::size_t openmax_alpha_top = 10;
  WeibullVariable openmax_eval = WeibullVariable::distance;

  double kl_epsilon = 1e-12;
  TemplateGrouping kl_group_by = TemplateGrouping::predicted;

  double mahalanobis_shrinkage = 1e-6;

  /// 0 selects d / 2.
  std::size_t vim_principal_dim = 0;

  std::vector<double> react_tau{0.5, 0.75, 1.0, 1.5, 1.75, 2.0};
  std::vector<double> react_percentiles;
  std::vector<double> dice_rho{0.01, 0.05, 0.08, 0.1, 0.3, 0.7};

  double target_tpr = 0.95;
  ThresholdSplit threshold_split = ThresholdSplit::id_test;
  double holdout_fraction = 0.5;

  std::uint64_t seed = 0;
  /// 0 defers to $OODBENCH_JOBS, then 1.
  std::size_t jobs = 0;

  bool uses(Method m) const;
  FitOptions fit_options() const;
  /// Throws ValidationError on out-of-range hyperparameters.
  void validate() const;
  std::size_t effective_jobs() const;
};

/// Parses a JSON config. Relative paths are resolved against the config
/// file's directory. Unknown keys and unknown method names are rejected.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view json_text,
                           const std::filesystem::path& base_dir = {});

}  // namespace ood
