#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ood/manifest.hpp"
#include "ood/types.hpp"

namespace ood {

/// Gaussian class-conditional data with a known Bayes-optimal linear head.
///
/// Class c has mean `separation * e_c` and diagonal covariance: `scale^2` on
/// the first `intrinsic_rank` coordinates and `(scale * residual_scale)^2` on
/// the rest. OOD samples are drawn from the same class mixture (classes in
/// round-robin) and then moved by `shift * scale` along a unit direction that
/// is orthogonal to every class mean, inside the low-variance coordinates
/// when intrinsic_rank < dim. `ood_mean_decay` removes that fraction of the
/// class-mean offset from every OOD sample, so 1 centres OOD data between
/// the classes where the head is unsure.
struct SyntheticSpec {
  std::size_t classes = 5;
  std::size_t dim = 16;
  std::size_t train_per_class = 400;
  std::size_t test_per_class = 400;
  std::size_t ood_samples = 2000;
  double separation = 4.0;
  double scale = 1.0;
  std::vector<double> ood_shifts{10.0};
  double ood_mean_decay = 0.0;
  /// 0 means full rank.
  std::size_t intrinsic_rank = 0;
  double residual_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  ClassifierHead head;
  LabeledSplit train;
  LabeledSplit test;
  std::vector<OodSplit> ood;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes every array plus `manifest.json` into `dir`; returns the manifest path.
std::filesystem::path write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace ood
