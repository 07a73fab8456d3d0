#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ood/error.hpp"
#include "ood/types.hpp"

namespace ood {

struct LabeledSplitPaths {
  std::filesystem::path features;
  std::filesystem::path logits;
  std::filesystem::path labels;
};

struct OodSetPaths {
  std::string name;
  /// Free-form grouping used by reports ("food", "non-food", ...). May be empty.
  std::string group;
  std::filesystem::path features;
  std::filesystem::path logits;
};

struct HeadPaths {
  std::filesystem::path weight;
  std::filesystem::path bias;
};

/// Validated description of an exported dataset. All paths are absolute
/// (resolved against the manifest's directory).
struct DatasetManifest {
  std::filesystem::path source;
  LabeledSplitPaths id_train;
  LabeledSplitPaths id_test;
  HeadPaths head;
  std::vector<OodSetPaths> ood_sets;
  std::vector<std::string> class_names;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
};

/// Every inconsistency found while validating a manifest, one per entry.
class ManifestError : public ValidationError {
 public:
  explicit ManifestError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses the JSON manifest and eagerly reads every referenced array to check
/// feature width, class count, row alignment and label range.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes `manifest` as JSON; paths are stored relative to the output file's
/// directory when they live beneath it.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct LabeledSplit {
  FeatureMatrix features;
  LogitMatrix logits;
  Labels labels;
};

struct OodSplit {
  std::string name;
  std::string group;
  FeatureMatrix features;
  LogitMatrix logits;
};

LabeledSplit load_labeled_split(const LabeledSplitPaths& paths);
OodSplit load_ood_split(const OodSetPaths& paths);
ClassifierHead load_head(const HeadPaths& paths);

}  // namespace ood
