#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ood/calibration.hpp"
#include "ood/types.hpp"

namespace ood {

enum class Method {
  msp,
  odin,
  openmax,
  kl_matching,
  mahalanobis,
  maxlogit,
  energy,
  vim,
  react,
  dice,
};

inline constexpr Method kAllMethods[] = {
    Method::msp,         Method::odin,     Method::openmax, Method::kl_matching,
    Method::mahalanobis, Method::maxlogit, Method::energy,  Method::vim,
    Method::react,       Method::dice,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

/// True for methods that only look at the logit vector.
bool is_logit_only(Method m);

/// A method plus the single hyperparameter that distinguishes sweep members
/// (T for ODIN, tau for ReAct, rho for DICE).
struct MethodTag {
  Method method = Method::msp;
  std::optional<double> hyperparameter;

  /// "react(tau=1.75)", "dice(rho=0.05)", "odin(T=1000)", or the bare name.
  std::string label() const;
};

/// Per-sample scores where higher always means "more in-distribution".
struct ScoreVector {
  MethodTag tag;
  std::vector<double> scores;
  /// How the published formula was oriented into the ID-affinity convention.
  std::string convention_note;

  std::size_t size() const { return scores.size(); }
};

ScoreVector score_msp(const LogitMatrix& logits);
ScoreVector score_odin(const LogitMatrix& logits, double temperature = 1000.0);
ScoreVector score_openmax(const LogitMatrix& logits, const FeatureMatrix& features,
                          const WeibullTails& tails, std::size_t alpha_top = 10);
ScoreVector score_kl_matching(const LogitMatrix& logits, const PosteriorTemplates& templates);
ScoreVector score_mahalanobis(const FeatureMatrix& features, const GaussianStats& stats);
ScoreVector score_maxlogit(const LogitMatrix& logits);
ScoreVector score_energy(const LogitMatrix& logits);
ScoreVector score_vim(const LogitMatrix& logits, const FeatureMatrix& features,
                      const VimSubspace& subspace);
ScoreVector score_react(const FeatureMatrix& features, const ClassifierHead& head, double tau);
ScoreVector score_dice(const FeatureMatrix& features, const ClassifierHead& head,
                       const DiceMask& mask);

/// Result of revising one logit vector the OpenMax way.
struct OpenMaxRevision {
  std::vector<double> revised;  // z'_1..z'_C
  double unknown = 0.0;         // z'_alpha
};

/// z'_i = z_i (1 - w_i r_i), z'_alpha = sum_i z_i w_i r_i, where w is the
/// per-class Weibull CDF and r the rank weight (0 for unrevised classes).
OpenMaxRevision openmax_revise(std::span<const double> z, std::span<const double> cdf,
                               std::span<const double> rank_weight);

/// Rank weights (alpha - r + 1) / alpha for the alpha_top largest logits
/// (rank r = 1 is the largest, ties by lower index), 0 elsewhere.
std::vector<double> openmax_rank_weights(std::span<const double> z, std::size_t alpha_top);

/// Largest known-class probability of the extended softmax [z'; z'_alpha].
double openmax_known_probability(const OpenMaxRevision& revision);

}  // namespace ood
