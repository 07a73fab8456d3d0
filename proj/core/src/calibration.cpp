#include "ood/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "ood/diagnostics.hpp"
#include "ood/error.hpp"
#include "ood/numeric.hpp"
#include "ood/weibull.hpp"

namespace ood {
namespace {

void check_labels(const Labels& labels, std::size_t rows, std::size_t num_classes) {
  if (labels.size() != rows)
    throw ValidationError("label count " + std::to_string(labels.size()) + " does not match " +
                          std::to_string(rows) + " feature rows");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw ValidationError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                            " is out of range [0, " + std::to_string(num_classes) + ")");
}

}  // namespace

GaussianStats fit_gaussian(const FeatureMatrix& features, const Labels& labels,
                           std::size_t num_classes, double shrinkage) {
  const auto n = features.samples();
  const auto d = features.dim();
  check_labels(labels, n, num_classes);
  if (!(shrinkage >= 0.0)) throw ValidationError("shrinkage must be >= 0");
  require_finite(features.values, "fit_gaussian features");

  std::vector<std::size_t> counts(num_classes, 0);
  GaussianStats stats;
  stats.shrinkage = shrinkage;
  stats.means = Matrix::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(labels[i]);
    stats.means.row(c) += features.values.row(static_cast<Eigen::Index>(i));
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] < 2)
      throw ValidationError("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                            " training samples; at least 2 are required");
    stats.means.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }

  Matrix centered = features.values;
  for (std::size_t i = 0; i < n; ++i)
    centered.row(static_cast<Eigen::Index>(i)) -= stats.means.row(static_cast<Eigen::Index>(labels[i]));
  Matrix cov = centered.transpose() * centered;
  cov /= static_cast<double>(n);

  const double trace = cov.trace();
  const double unit = trace > 0.0 ? trace / static_cast<double>(d) : 1.0;
  cov.diagonal().array() += shrinkage * unit;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();
  const double largest = std::abs(ev(ev.size() - 1));
  const double smallest = ev(0);
  if (!(smallest > largest * static_cast<double>(d) * std::numeric_limits<double>::epsilon()) || !(smallest > 0.0))
    throw NumericalError("shared covariance is singular after shrinkage (smallest eigenvalue " +
                         std::to_string(smallest) + ")");

  const Matrix& v = eig.eigenvectors();
  Matrix precision = v * ev.cwiseInverse().asDiagonal() * v.transpose();
  stats.precision = 0.5 * (precision + precision.transpose());
  return stats;
}

WeibullTails fit_weibull_tails(const FeatureMatrix& features, const LogitMatrix& logits,
                               const Labels& labels, std::size_t tail_size, WeibullVariable variable) {
  const auto n = features.samples();
  const auto num_classes = logits.classes();
  if (tail_size < 3) throw ValidationError("tail size must be at least 3");
  if (logits.samples() != n) throw ValidationError("features and logits disagree on sample count");
  check_labels(labels, n, num_classes);

  std::vector<std::vector<std::size_t>> correct(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pred = argmax(row_span(logits.values, static_cast<Eigen::Index>(i)));
    if (pred == static_cast<std::size_t>(labels[i])) correct[pred].push_back(i);
  }

  WeibullTails tails;
  tails.tail_size = tail_size;
  tails.variable = variable;
  tails.mav = Matrix::Zero(static_cast<Eigen::Index>(num_classes), features.values.cols());
  tails.scale.resize(num_classes);
  tails.shape.resize(num_classes);
  tails.tail_count.resize(num_classes);
  tails.clamped.resize(num_classes);

  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto& members = correct[c];
    if (members.empty())
      throw ValidationError("class " + std::to_string(c) + " has no correctly classified training samples");
    const auto ci = static_cast<Eigen::Index>(c);
    for (auto i : members) tails.mav.row(ci) += features.values.row(static_cast<Eigen::Index>(i));
    tails.mav.row(ci) /= static_cast<double>(members.size());

    std::vector<double> values;
    values.reserve(members.size());
    for (auto i : members) {
      const auto r = static_cast<Eigen::Index>(i);
      values.push_back(variable == WeibullVariable::distance
                           ? (features.values.row(r) - tails.mav.row(ci)).norm()
                           : logits.values(r, ci));
    }
    std::sort(values.begin(), values.end(), std::greater<>());
    values.resize(std::min(tail_size, values.size()));
    tails.tail_count[c] = values.size();

    const bool any_positive = std::any_of(values.begin(), values.end(), [](double v) { return v > 0.0; });
    if (!any_positive) {
      // every tail value is zero (or negative): any positive value is unknown
      tails.scale[c] = std::numeric_limits<double>::min();
      tails.shape[c] = WeibullFitOptions{}.max_shape;
      tails.clamped[c] = true;
      warn("class " + std::to_string(c) + ": Weibull tail has no positive values; using a point mass at 0");
      continue;
    }
    const auto fit = fit_weibull_mle(values);
    tails.scale[c] = fit.scale;
    tails.shape[c] = fit.shape;
    tails.clamped[c] = fit.clamped;
    if (fit.clamped)
      warn("class " + std::to_string(c) + ": Weibull shape clamped to " + std::to_string(fit.shape) +
           " (degenerate tail)");
  }
  return tails;
}

void clamp_probabilities(std::span<double> p, double floor) {
  if (floor <= 0.0) return;
  if (floor * static_cast<double>(p.size()) > 1.0)
    throw ValidationError("probability floor too large for the number of classes");
  std::vector<bool> fixed(p.size(), false);
  while (true) {
    std::size_t nfixed = 0;
    double free_sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!fixed[i] && p[i] < floor) fixed[i] = true;
      if (fixed[i]) {
        ++nfixed;
      } else {
        free_sum += p[i];
      }
    }
    if (nfixed == p.size()) {
      for (auto& v : p) v = floor;
      return;
    }
    const double target = 1.0 - static_cast<double>(nfixed) * floor;
    bool dropped = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (fixed[i]) {
        p[i] = floor;
      } else {
        p[i] *= target / free_sum;
        dropped = dropped || p[i] < floor;
      }
    }
    if (!dropped) return;
  }
}

PosteriorTemplates fit_templates(const LogitMatrix& logits, double epsilon, TemplateGrouping grouping,
                                 const Labels* labels) {
  const auto n = logits.samples();
  const auto num_classes = logits.classes();
  if (grouping == TemplateGrouping::label) {
    if (!labels) throw ValidationError("label grouping requires training labels");
    check_labels(*labels, n, num_classes);
  }
  if (!(epsilon >= 0.0)) throw ValidationError("template epsilon must be >= 0");
  require_finite(logits.values, "fit_templates logits");

  PosteriorTemplates t;
  t.epsilon = epsilon;
  t.grouping = grouping;
  t.q = Matrix::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(num_classes));
  std::vector<std::size_t> counts(num_classes, 0);
  std::vector<double> p(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = row_span(logits.values, static_cast<Eigen::Index>(i));
    softmax(row, p);
    const auto g = grouping == TemplateGrouping::predicted ? argmax(row) : static_cast<std::size_t>((*labels)[i]);
    ++counts[g];
    for (std::size_t j = 0; j < num_classes; ++j) t.q(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) += p[j];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw ValidationError("no training sample falls in the template group of class " + std::to_string(c));
    auto row = t.q.row(static_cast<Eigen::Index>(c));
    row /= static_cast<double>(counts[c]);
    clamp_probabilities(std::span<double>(row.data(), num_classes), epsilon);
  }
  return t;
}

VimSubspace fit_vim(const FeatureMatrix& features, const ClassifierHead& head, std::size_t principal_dim) {
  const auto n = features.samples();
  const auto d = features.dim();
  if (head.dim() != d) throw ValidationError("head width does not match feature width");
  if (principal_dim == 0 || principal_dim >= d)
    throw ValidationError("principal dimension must satisfy 0 < D' < d (D' = " + std::to_string(principal_dim) +
                          ", d = " + std::to_string(d) + ")");
  if (n == 0) throw ValidationError("fit_vim needs training features");
  require_finite(features.values, "fit_vim features");
  if (n <= d) warn("fit_vim: " + std::to_string(n) + " samples for " + std::to_string(d) + " dimensions");

  VimSubspace vim;
  vim.principal_dim = principal_dim;
  const Eigen::MatrixXd weight = head.weight;
  vim.offset = -Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(weight).solve(head.bias);

  Matrix centered = features.values.rowwise() - vim.offset.transpose();
  Matrix moment = centered.transpose() * centered;
  moment /= static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(moment);
  if (eig.info() != Eigen::Success) throw NumericalError("feature eigendecomposition failed");
  // eigenvalues ascend, so the residual space is the leading block
  vim.residual_basis = eig.eigenvectors().leftCols(static_cast<Eigen::Index>(d - principal_dim));

  const Matrix residual = centered * vim.residual_basis;
  const auto logits = logits_from_features(features, head);
  double logit_sum = 0.0, residual_sum = 0.0, norm_sum = 0.0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    logit_sum += logits.values.row(i).maxCoeff();
    residual_sum += residual.row(i).norm();
    norm_sum += centered.row(i).norm();
  }
  if (!(residual_sum > 1e-10 * norm_sum))
    throw NumericalError("degenerate ViM subspace: training residuals vanish outside the principal subspace");
  vim.alpha = logit_sum / residual_sum;
  if (!(vim.alpha > 0.0) || !std::isfinite(vim.alpha))
    throw NumericalError("ViM scaling factor is not positive (mean max-logit " +
                         std::to_string(logit_sum / static_cast<double>(n)) + ")");
  return vim;
}

DiceMask fit_dice_mask(const FeatureMatrix& features, const ClassifierHead& head, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("DICE sparsity must lie in [0, 1]");
  const auto d = features.dim();
  if (head.dim() != d) throw ValidationError("head width does not match feature width");
  if (features.samples() == 0) throw ValidationError("fit_dice_mask needs training features");

  DiceMask mask;
  mask.rho = rho;
  mask.mean_activation = Vector::Zero(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < features.values.rows(); ++i) mask.mean_activation += features.values.row(i).transpose();
  mask.mean_activation /= static_cast<double>(features.samples());

  const auto keep = static_cast<std::size_t>(std::round((1.0 - rho) * static_cast<double>(d)));
  mask.mask = Matrix::Zero(head.weight.rows(), head.weight.cols());
  std::vector<std::size_t> order(d);
  std::vector<double> contribution(d);
  for (Eigen::Index c = 0; c < head.weight.rows(); ++c) {
    for (std::size_t j = 0; j < d; ++j)
      contribution[j] = head.weight(c, static_cast<Eigen::Index>(j)) * mask.mean_activation(static_cast<Eigen::Index>(j));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return contribution[a] > contribution[b]; });
    for (std::size_t r = 0; r < keep; ++r) mask.mask(c, static_cast<Eigen::Index>(order[r])) = 1.0;
  }
  return mask;
}

double fit_react_threshold(const FeatureMatrix& features, double percentile) {
  if (!(percentile > 0.0 && percentile < 1.0)) throw ValidationError("ReAct percentile must lie in (0, 1)");
  if (features.values.size() == 0) throw ValidationError("fit_react_threshold needs training features");
  std::vector<double> pooled(features.values.data(), features.values.data() + features.values.size());
  return quantile(std::move(pooled), percentile);
}

}  // namespace ood
