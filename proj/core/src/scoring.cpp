#include "ood/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Cholesky>

#include "ood/error.hpp"
#include "ood/numeric.hpp"
#include "ood/weibull.hpp"

namespace ood {
namespace {

struct MethodInfo {
  Method method;
  std::string_view name;
  bool logit_only;
};

constexpr MethodInfo kMethodInfo[] = {
    {Method::msp, "msp", true},
    {Method::odin, "odin", true},
    {Method::openmax, "openmax", false},
    {Method::kl_matching, "kl_matching", true},
    {Method::mahalanobis, "mahalanobis", false},
    {Method::maxlogit, "maxlogit", true},
    {Method::energy, "energy", true},
    {Method::vim, "vim", false},
    {Method::react, "react", false},
    {Method::dice, "dice", false},
};

const MethodInfo& info(Method m) {
  for (const auto& i : kMethodInfo)
    if (i.method == m) return i;
  return kMethodInfo[0];
}

void check_classes(const LogitMatrix& logits, std::size_t expected, std::string_view method) {
  if (logits.classes() != expected)
    throw ValidationError(std::string(method) + ": logits have " + std::to_string(logits.classes()) +
                          " columns, expected " + std::to_string(expected));
  require_finite(logits.values, std::string(method) + " logits");
}

void check_features(const FeatureMatrix& features, std::size_t expected, std::string_view method) {
  if (features.dim() != expected)
    throw ValidationError(std::string(method) + ": features have width " + std::to_string(features.dim()) +
                          ", expected " + std::to_string(expected));
  require_finite(features.values, std::string(method) + " features");
}

void check_rows(const LogitMatrix& logits, const FeatureMatrix& features, std::string_view method) {
  if (logits.samples() != features.samples())
    throw ValidationError(std::string(method) + ": " + std::to_string(logits.samples()) + " logit rows but " +
                          std::to_string(features.samples()) + " feature rows");
}

ScoreVector make(Method m, std::optional<double> hyper, std::size_t n, std::string note) {
  ScoreVector s;
  s.tag = {m, hyper};
  s.scores.resize(n);
  s.convention_note = std::move(note);
  return s;
}

ScoreVector max_softmax(const LogitMatrix& logits, Method m, std::optional<double> temperature, std::string note) {
  auto out = make(m, temperature, logits.samples(), std::move(note));
  std::vector<double> scaled(logits.classes()), p(logits.classes());
  const double t = temperature.value_or(1.0);
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i) {
    const auto row = row_span(logits.values, i);
    for (std::size_t j = 0; j < row.size(); ++j) scaled[j] = row[j] / t;
    softmax(scaled, p);
    out.scores[static_cast<std::size_t>(i)] = *std::max_element(p.begin(), p.end());
  }
  return out;
}

ScoreVector energy_of(const LogitMatrix& logits, Method m, std::optional<double> hyper, std::string note) {
  auto out = make(m, hyper, logits.samples(), std::move(note));
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i)
    out.scores[static_cast<std::size_t>(i)] = logsumexp(row_span(logits.values, i));
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// q * phi(p / q) with phi(r) = r log r - r + 1, nonnegative and flat at p == q
double kl_term(double p, double q) {
  if (p == 0.0) return q;
  const double delta = (p - q) / q;
  if (std::abs(delta) >= 0.1) return p * std::log(p / q) - p + q;
  double power = delta * delta, sum = 0.0;
  for (int n = 2; n < 40; ++n) {
    const double term = power / (n * (n - 1.0));
    sum += (n % 2 == 0) ? term : -term;
    if (std::abs(term) < 1e-18 * sum) break;
    power *= delta;
  }
  return q * sum;
}

}  // namespace

std::string_view method_name(Method m) { return info(m).name; }

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& i : kMethodInfo)
    if (i.name == name) return i.method;
  return std::nullopt;
}

bool is_logit_only(Method m) { return info(m).logit_only; }

std::string MethodTag::label() const {
  std::string out(method_name(method));
  if (!hyperparameter) return out;
  const char* key = method == Method::odin ? "T" : method == Method::react ? "tau" : method == Method::dice ? "rho" : "h";
  return out + "(" + key + "=" + format_number(*hyperparameter) + ")";
}

ScoreVector score_msp(const LogitMatrix& logits) {
  require_finite(logits.values, "msp logits");
  return max_softmax(logits, Method::msp, std::nullopt, "max softmax probability, used as is");
}

ScoreVector score_odin(const LogitMatrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("odin: temperature must be > 0");
  require_finite(logits.values, "odin logits");
  return max_softmax(logits, Method::odin, temperature, "max temperature-scaled softmax, used as is");
}

std::vector<double> openmax_rank_weights(std::span<const double> z, std::size_t alpha_top) {
  const auto c = z.size();
  const auto alpha = std::min(alpha_top, c);
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  std::vector<double> weight(c, 0.0);
  for (std::size_t r = 0; r < alpha; ++r)
    weight[order[r]] = static_cast<double>(alpha - r) / static_cast<double>(alpha);
  return weight;
}

OpenMaxRevision openmax_revise(std::span<const double> z, std::span<const double> cdf,
                               std::span<const double> rank_weight) {
  OpenMaxRevision out;
  out.revised.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double w = cdf[i] * rank_weight[i];
    out.revised[i] = z[i] * (1.0 - w);
    out.unknown += z[i] * w;
  }
  return out;
}

double openmax_known_probability(const OpenMaxRevision& r) {
  double m = r.unknown;
  for (double v : r.revised) m = std::max(m, v);
  double denom = std::exp(r.unknown - m);
  double best = -std::numeric_limits<double>::infinity();
  for (double v : r.revised) {
    denom += std::exp(v - m);
    best = std::max(best, v);
  }
  return std::exp(best - m) / denom;
}

ScoreVector score_openmax(const LogitMatrix& logits, const FeatureMatrix& features, const WeibullTails& tails,
                          std::size_t alpha_top) {
  const auto c = tails.scale.size();
  if (alpha_top == 0) throw ValidationError("openmax: alpha_top must be >= 1");
  check_classes(logits, c, "openmax");
  const bool use_distance = tails.variable == WeibullVariable::distance;
  if (use_distance) {
    check_features(features, static_cast<std::size_t>(tails.mav.cols()), "openmax");
    check_rows(logits, features, "openmax");
  }

  auto out = make(Method::openmax, std::nullopt, logits.samples(),
                  "largest known-class OpenMax probability, used as is");
  std::vector<double> cdf(c);
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i) {
    const auto z = row_span(logits.values, i);
    const auto rank = openmax_rank_weights(z, alpha_top);
    for (std::size_t k = 0; k < c; ++k) {
      if (rank[k] == 0.0) {
        cdf[k] = 0.0;
        continue;
      }
      const double x = use_distance
                           ? (features.values.row(i) - tails.mav.row(static_cast<Eigen::Index>(k))).norm()
                           : z[k];
      cdf[k] = weibull_cdf(x, tails.scale[k], tails.shape[k]);
    }
    out.scores[static_cast<std::size_t>(i)] = openmax_known_probability(openmax_revise(z, cdf, rank));
  }
  return out;
}


ScoreVector score_kl_matching(const LogitMatrix& logits, const PosteriorTemplates& templates) {
  const auto c = static_cast<std::size_t>(templates.q.rows());
  check_classes(logits, static_cast<std::size_t>(templates.q.cols()), "kl_matching");
  auto out = make(Method::kl_matching, std::nullopt, logits.samples(),
                  "negated minimum KL divergence to the class templates");
  // sum_j p log(p/q) equals sum_j q phi(p/q) + (1 - sum_j q) whenever p sums to one
  std::vector<double> deficit(c);
  for (std::size_t t = 0; t < c; ++t) {
    long double mass = 0.0L;
    for (Eigen::Index j = 0; j < templates.q.cols(); ++j) mass += templates.q(static_cast<Eigen::Index>(t), j);
    deficit[t] = static_cast<double>(1.0L - mass);
  }
  std::vector<double> p(logits.classes());
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i) {
    softmax(row_span(logits.values, i), p);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < c; ++t) {
      double kl = deficit[t];
      for (std::size_t j = 0; j < p.size(); ++j) kl += kl_term(p[j], templates.q(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
      best = std::min(best, kl);
    }
    // rounding can push a self-match a hair below zero
    out.scores[static_cast<std::size_t>(i)] = -std::max(best, 0.0);
  }
  return out;
}

ScoreVector score_mahalanobis(const FeatureMatrix& features, const GaussianStats& stats) {
  check_features(features, static_cast<std::size_t>(stats.means.cols()), "mahalanobis");
  // precision = L L^T, so d_M(x, mu) = ||(x - mu)^T L||^2
  Eigen::LLT<Matrix> llt(stats.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("mahalanobis: precision matrix is not positive definite");
  const Matrix lower = llt.matrixL();
  const Matrix whitened = features.values * lower;
  const Matrix whitened_means = stats.means * lower;

  auto out = make(Method::mahalanobis, std::nullopt, features.samples(),
                  "max over classes of the negated squared Mahalanobis distance, used as is");
  for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < stats.means.rows(); ++k) {
      const double dist = features.values.row(i) == stats.means.row(k)
                              ? 0.0
                              : (whitened.row(i) - whitened_means.row(k)).squaredNorm();
      best = std::min(best, dist);
    }
    out.scores[static_cast<std::size_t>(i)] = -best;
  }
  return out;
}

ScoreVector score_maxlogit(const LogitMatrix& logits) {
  require_finite(logits.values, "maxlogit logits");
  auto out = make(Method::maxlogit, std::nullopt, logits.samples(),
                  "max logit; the anomaly score -max z is negated");
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i)
    out.scores[static_cast<std::size_t>(i)] = logits.values.row(i).maxCoeff();
  return out;
}

ScoreVector score_energy(const LogitMatrix& logits) {
  require_finite(logits.values, "energy logits");
  return energy_of(logits, Method::energy, std::nullopt, "log-sum-exp of the logits; the energy -logsumexp is negated");
}

ScoreVector score_vim(const LogitMatrix& logits, const FeatureMatrix& features, const VimSubspace& subspace) {
  check_features(features, static_cast<std::size_t>(subspace.offset.size()), "vim");
  require_finite(logits.values, "vim logits");
  check_rows(logits, features, "vim");
  const Matrix residual = (features.values.rowwise() - subspace.offset.transpose()) * subspace.residual_basis;

  auto out = make(Method::vim, std::nullopt, logits.samples(),
                  "negated virtual-logit softmax probability (that probability grows for OOD inputs)");
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i) {
    const double virtual_logit = subspace.alpha * residual.row(i).norm();
    const auto z = row_span(logits.values, i);
    const double m = std::max(virtual_logit, *std::max_element(z.begin(), z.end()));
    double denom = std::exp(virtual_logit - m);
    for (double v : z) denom += std::exp(v - m);
    out.scores[static_cast<std::size_t>(i)] = -std::exp(virtual_logit - m) / denom;
  }
  return out;
}

ScoreVector score_react(const FeatureMatrix& features, const ClassifierHead& head, double tau) {
  if (std::isnan(tau)) throw ValidationError("react: tau is NaN");
  check_features(features, head.dim(), "react");
  FeatureMatrix clipped{features.values.cwiseMin(tau)};
  return energy_of(logits_from_features(clipped, head), Method::react, tau,
                   "log-sum-exp of logits recomputed from activations clipped at tau");
}

ScoreVector score_dice(const FeatureMatrix& features, const ClassifierHead& head, const DiceMask& mask) {
  check_features(features, head.dim(), "dice");
  if (mask.mask.rows() != head.weight.rows() || mask.mask.cols() != head.weight.cols())
    throw ValidationError("dice: mask shape does not match the classifier head");
  const ClassifierHead sparse{head.weight.cwiseProduct(mask.mask), head.bias};
  return energy_of(logits_from_features(features, sparse), Method::dice, mask.rho,
                   "log-sum-exp of logits from the sparsified head");
}

}  // namespace ood
