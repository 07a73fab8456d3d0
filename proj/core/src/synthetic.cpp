#include "ood/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "ood/array_io.hpp"
#include "ood/error.hpp"
#include "ood/numeric.hpp"

namespace ood {
namespace fs = std::filesystem;

namespace {

std::size_t rank_of(const SyntheticSpec& s) { return s.intrinsic_rank ? s.intrinsic_rank : s.dim; }

std::string shift_name(double shift) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ood_shift_%g", shift);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (classes == 0 || dim == 0) throw ValidationError("synthetic spec needs at least one class and one dimension");
  if (train_per_class == 0 || test_per_class == 0 || ood_samples == 0)
    throw ValidationError("synthetic sample counts must be positive");
  if (intrinsic_rank > dim) throw ValidationError("intrinsic rank cannot exceed the feature dimension");
  if (classes > rank_of(*this)) throw ValidationError("class means need at least as many high-variance coordinates as classes");
  if (!(scale > 0.0) || !(residual_scale > 0.0)) throw ValidationError("synthetic scales must be positive");
  if (!(ood_mean_decay >= 0.0 && ood_mean_decay <= 1.0)) throw ValidationError("OOD mean decay must lie in [0, 1]");
  if (!(separation >= 0.0)) throw ValidationError("class separation must be >= 0");
  for (double s : ood_shifts)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("OOD shift magnitudes must be finite and >= 0");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto c = spec.classes;
  const auto d = spec.dim;
  const auto r = rank_of(spec);
  const auto dc = static_cast<Eigen::Index>(c);
  const auto dd = static_cast<Eigen::Index>(d);

  Vector stddev(dd);
  for (std::size_t j = 0; j < d; ++j) stddev(static_cast<Eigen::Index>(j)) = j < r ? spec.scale : spec.scale * spec.residual_scale;
  Matrix means = Matrix::Zero(dc, dd);
  for (std::size_t k = 0; k < c; ++k) means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = spec.separation;

  // Bayes-optimal linear rule for equal priors and a shared diagonal covariance
  SyntheticData data;
  const Vector inv_var = stddev.array().square().inverse();
  data.head.weight = means * inv_var.asDiagonal();
  data.head.bias = Vector(dc);
  for (Eigen::Index k = 0; k < dc; ++k)
    data.head.bias(k) = -0.5 * (means.row(k).array().square() * inv_var.transpose().array()).sum();

  Vector direction = Vector::Zero(dd);
  const std::size_t first = r < d ? r : (c < d ? c : 0);
  for (std::size_t j = first; j < d; ++j) direction(static_cast<Eigen::Index>(j)) = 1.0;
  direction /= direction.norm();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t cls, Eigen::Index row, Matrix& out) {
    for (Eigen::Index j = 0; j < dd; ++j) out(row, j) = means(static_cast<Eigen::Index>(cls), j) + stddev(j) * normal(rng);
  };
  auto labeled = [&](std::size_t per_class) {
    LabeledSplit s;
    s.features.values.resize(static_cast<Eigen::Index>(per_class * c), dd);
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t i = 0; i < per_class; ++i) {
        const auto row = static_cast<Eigen::Index>(k * per_class + i);
        draw(k, row, s.features.values);
        s.labels.push_back(static_cast<std::int64_t>(k));
      }
    }
    s.logits = logits_from_features(s.features, data.head);
    return s;
  };
  data.train = labeled(spec.train_per_class);
  data.test = labeled(spec.test_per_class);

  for (double shift : spec.ood_shifts) {
    OodSplit o;
    o.name = shift_name(shift);
    o.features.values.resize(static_cast<Eigen::Index>(spec.ood_samples), dd);
    for (std::size_t i = 0; i < spec.ood_samples; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      draw(i % c, row, o.features.values);
      o.features.values.row(row) += (shift * spec.scale) * direction.transpose() -
                                    spec.ood_mean_decay * means.row(static_cast<Eigen::Index>(i % c));
    }
    o.logits = logits_from_features(o.features, data.head);
    data.ood.push_back(std::move(o));
  }
  return data;
}

fs::path write_synthetic(const SyntheticData& data, const fs::path& dir) {
  fs::create_directories(dir);
  const auto base = fs::absolute(dir);
  DatasetManifest m;
  auto split = [&](const LabeledSplit& s, const std::string& prefix) {
    LabeledSplitPaths p{base / (prefix + "_features.npy"), base / (prefix + "_logits.npy"), base / (prefix + "_labels.npy")};
    write_array(from_matrix(s.features.values), p.features);
    write_array(from_matrix(s.logits.values), p.logits);
    write_array(from_labels(s.labels), p.labels);
    return p;
  };
  m.id_train = split(data.train, "train");
  m.id_test = split(data.test, "test");
  m.head = {base / "head_weight.npy", base / "head_bias.npy"};
  write_array(from_matrix(data.head.weight), m.head.weight);
  write_array(from_vector(data.head.bias), m.head.bias);
  for (const auto& o : data.ood) {
    OodSetPaths p{o.name, o.group, base / (o.name + "_features.npy"), base / (o.name + "_logits.npy")};
    write_array(from_matrix(o.features.values), p.features);
    write_array(from_matrix(o.logits.values), p.logits);
    m.ood_sets.push_back(std::move(p));
  }
  for (std::size_t k = 0; k < data.head.classes(); ++k) m.class_names.push_back("class_" + std::to_string(k));
  const auto path = base / "manifest.json";
  write_manifest(m, path);
  return path;
}

}  // namespace ood
