#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ood {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<std::int64_t>;

/// N x d penultimate-layer activations, one sample per row.
struct FeatureMatrix {
  Matrix values;

  std::size_t samples() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

/// N x C classifier logits, one sample per row.
struct LogitMatrix {
  Matrix values;

  std::size_t samples() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t classes() const { return static_cast<std::size_t>(values.cols()); }
};

/// Final affine layer: logits = weight * f + bias, weight is C x d.
struct ClassifierHead {
  Matrix weight;
  Vector bias;

  std::size_t classes() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weight.cols()); }
};

}  // namespace ood
