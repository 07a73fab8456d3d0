#include "ood/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "ood/array_io.hpp"
#include "ood/diagnostics.hpp"
#include "ood/error.hpp"
#include "ood/manifest.hpp"
#include "ood/metrics.hpp"
#include "ood/numeric.hpp"

namespace ood {
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

template <class T>
const T& need(const std::optional<T>& v, const MethodTag& tag) {
  if (!v) throw Error("artifacts have no component for " + tag.label() + "; rerun fit with this method selected");
  return *v;
}

// Runs task(i) for i in [0, n) on up to `jobs` threads. Each task owns the slot
// it writes, so the merged result does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_head(const ClassifierHead& fitted, const ClassifierHead& current) {
  if (fitted.dim() != current.dim() || fitted.classes() != current.classes())
    throw ValidationError("dimension drift: artifacts were fitted for d=" + std::to_string(fitted.dim()) +
                          ", C=" + std::to_string(fitted.classes()) + " but the manifest head has d=" +
                          std::to_string(current.dim()) + ", C=" + std::to_string(current.classes()));
  if (fitted.weight != current.weight || fitted.bias != current.bias)
    throw ValidationError("the manifest classifier head differs from the one the artifacts were fitted with");
}

CalibrationArtifacts load_fitted(const RunConfig& config, const DatasetManifest& manifest) {
  const auto dir = artifact_dir(config);
  if (!fs::exists(dir / "index.json"))
    throw Error("missing artifacts in " + dir.string() + "; run fit first");
  auto artifacts = load_artifacts(dir);
  check_head(artifacts.head, load_head(manifest.head));
  return artifacts;
}

std::string file_label(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_') {
      out += ch;
    } else if (ch != ')') {
      out += '_';
    }
  }
  return out;
}

std::vector<double> pick(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<MethodTag> method_variants(const RunConfig& config, const CalibrationArtifacts& artifacts) {
  std::vector<MethodTag> out;
  for (Method m : config.methods) {
    switch (m) {
      case Method::odin:
        out.push_back({m, config.odin_temperature});
        break;
      case Method::react: {
        if (artifacts.react.empty()) throw Error("artifacts have no ReAct thresholds; rerun fit with react selected");
        std::vector<double> seen;
        for (const auto& r : artifacts.react) {
          if (std::find(seen.begin(), seen.end(), r.tau) != seen.end()) continue;
          seen.push_back(r.tau);
          out.push_back({m, r.tau});
        }
        break;
      }
      case Method::dice:
        if (artifacts.dice.empty()) throw Error("artifacts have no DICE masks; rerun fit with dice selected");
        for (const auto& d : artifacts.dice) out.push_back({m, d.rho});
        break;
      default:
        out.push_back({m, std::nullopt});
    }
  }
  return out;
}

ScoreVector score_with(const MethodTag& tag, const RunConfig& config, const CalibrationArtifacts& artifacts,
                       const FeatureMatrix& features, const LogitMatrix& logits) {
  switch (tag.method) {
    case Method::msp:
      return score_msp(logits);
    case Method::odin:
      return score_odin(logits, tag.hyperparameter.value_or(config.odin_temperature));
    case Method::openmax:
      return score_openmax(logits, features, need(artifacts.weibull, tag), config.openmax_alpha_top);
    case Method::kl_matching:
      return score_kl_matching(logits, need(artifacts.templates, tag));
    case Method::mahalanobis:
      return score_mahalanobis(features, need(artifacts.gaussian, tag));
    case Method::maxlogit:
      return score_maxlogit(logits);
    case Method::energy:
      return score_energy(logits);
    case Method::vim:
      return score_vim(logits, features, need(artifacts.vim, tag));
    case Method::react:
      if (!tag.hyperparameter) throw ValidationError("react needs a tau");
      return score_react(features, artifacts.head, *tag.hyperparameter);
    case Method::dice: {
      if (!tag.hyperparameter) throw ValidationError("dice needs a rho");
      for (const auto& mask : artifacts.dice)
        if (mask.rho == *tag.hyperparameter) return score_dice(features, artifacts.head, mask);
      throw Error("artifacts have no DICE mask for " + tag.label());
    }
  }
  throw ValidationError("unknown method");
}

fs::path artifact_dir(const RunConfig& config) { return config.output_dir / "artifacts"; }
fs::path report_dir(const RunConfig& config) { return config.output_dir / "report"; }

CalibrationArtifacts cmd_fit(const RunConfig& config) {
  config.validate();
  const auto manifest = load_manifest(config.manifest);
  const auto train = load_labeled_split(manifest.id_train);
  const auto head = load_head(manifest.head);
  logit_consistency(train.logits, train.features, head);
  auto artifacts = calibrate(train.features, train.logits, train.labels, head, config.fit_options());
  save_artifacts(artifacts, artifact_dir(config));
  return artifacts;
}

EvalReport cmd_eval(const RunConfig& config) {
  config.validate();
  const auto manifest = load_manifest(config.manifest);
  const auto artifacts = load_fitted(config, manifest);
  const auto variants = method_variants(config, artifacts);
  const auto test = load_labeled_split(manifest.id_test);
  std::vector<OodSplit> ood;
  for (const auto& set : manifest.ood_sets) ood.push_back(load_ood_split(set));
  if (ood.empty()) throw ValidationError("manifest lists no OOD sets to evaluate");

  // Calibration rows and evaluation rows of the ID test split.
  std::vector<std::size_t> calib(test.labels.size());
  std::iota(calib.begin(), calib.end(), 0);
  std::vector<std::size_t> eval_rows = calib;
  if (config.threshold_split == ThresholdSplit::holdout) {
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> perm = calib;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    const auto k = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(perm.size())));
    if (k == 0 || k == perm.size())
      throw ValidationError("holdout_fraction leaves an empty calibration or evaluation part of the ID test split");
    calib.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    eval_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
    std::sort(calib.begin(), calib.end());
    std::sort(eval_rows.begin(), eval_rows.end());
  }

  struct VariantResult {
    Threshold threshold;
    std::vector<EvalCell> cells;
  };
  std::vector<VariantResult> results(variants.size());
  parallel_for(variants.size(), config.effective_jobs(), [&](std::size_t v) {
    const auto& tag = variants[v];
    const auto id_scores = score_with(tag, config, artifacts, test.features, test.logits);
    const auto id_calib = pick(id_scores.scores, calib);
    const auto id_eval = pick(id_scores.scores, eval_rows);
    auto& r = results[v];
    r.threshold = {calibrate_lambda(id_calib, config.target_tpr), config.target_tpr, tag, id_calib.size()};
    for (const auto& set : ood) {
      const auto ood_scores = score_with(tag, config, artifacts, set.features, set.logits);
      const auto& s = ood_scores.scores;
      EvalCell cell;
      cell.method = tag.label();
      cell.family = std::string(method_name(tag.method));
      cell.hyperparameter = tag.hyperparameter;
      cell.ood_dataset = set.name;
      cell.group = set.group;
      if (s.empty()) throw ValidationError("OOD set '" + set.name + "' is empty");
      const auto accepted =
          std::count_if(s.begin(), s.end(), [&](double x) { return x >= r.threshold.lambda; });
      cell.fpr95 = static_cast<double>(accepted) / static_cast<double>(s.size());
      cell.auroc = auroc(id_eval, s);
      cell.lambda = r.threshold.lambda;
      cell.n_id = id_eval.size();
      cell.n_ood = s.size();
      cell.low_n = cell.n_id < kLowSampleCount || cell.n_ood < kLowSampleCount;
      r.cells.push_back(std::move(cell));
    }
  });

  std::vector<EvalCell> cells;
  for (auto& r : results)
    for (auto& c : r.cells) {
      if (c.low_n && &r == &results.front())
        warn("cell for OOD set '" + c.ood_dataset + "' has fewer than " + std::to_string(kLowSampleCount) +
             " samples on one side; its metrics are flagged low-N");
      cells.push_back(std::move(c));
    }
  auto report = build_report(std::move(cells));

  const auto dir = report_dir(config);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "cells.tsv");
    write_cells_tsv(out, report);
  }
  {
    auto out = open_out(dir / "report.txt");
    write_text_table(out, report);
  }
  {
    auto out = open_out(dir / "chart.svg");
    write_svg_chart(out, report, "Mean AUROC and FPR95 per method");
  }
  {
    auto out = open_out(dir / "sweep_summary.tsv");
    write_sweep_summary(out, report);
  }
  {
    auto out = open_out(dir / "thresholds.tsv");
    out << "method\tlambda\ttarget_tpr\tcalibration_count\tsplit\n";
    const char* split = config.threshold_split == ThresholdSplit::id_test ? "id_test" : "holdout";
    for (const auto& r : results)
      out << r.threshold.tag.label() << '\t' << fmt(r.threshold.lambda) << '\t' << fmt(r.threshold.target_tpr) << '\t'
          << r.threshold.calibration_count << '\t' << split << '\n';
  }
  return report;
}

std::vector<ScoreVector> cmd_score(const RunConfig& config, const ScoreRequest& request) {
  config.validate();
  const auto manifest = load_manifest(config.manifest);
  const auto artifacts = load_fitted(config, manifest);
  const auto variants = method_variants(config, artifacts);

  FeatureMatrix features;
  LogitMatrix logits;
  if (request.split == "id_test" || request.split == "id_train") {
    auto s = load_labeled_split(request.split == "id_test" ? manifest.id_test : manifest.id_train);
    features = std::move(s.features);
    logits = std::move(s.logits);
  } else {
    const auto it = std::find_if(manifest.ood_sets.begin(), manifest.ood_sets.end(),
                                 [&](const OodSetPaths& p) { return p.name == request.split; });
    if (it == manifest.ood_sets.end())
      throw ValidationError("unknown split '" + request.split + "'; expected id_test, id_train or an OOD set name");
    auto s = load_ood_split(*it);
    features = std::move(s.features);
    logits = std::move(s.logits);
  }
  std::optional<LabeledSplit> calibration;
  if (!request.lambda) calibration = load_labeled_split(manifest.id_test);

  std::vector<ScoreVector> scores(variants.size());
  std::vector<Threshold> thresholds(variants.size());
  parallel_for(variants.size(), config.effective_jobs(), [&](std::size_t v) {
    scores[v] = score_with(variants[v], config, artifacts, features, logits);
    if (request.lambda) {
      thresholds[v] = {*request.lambda, config.target_tpr, variants[v], 0};
    } else {
      const auto id = request.split == "id_test"
                          ? scores[v]
                          : score_with(variants[v], config, artifacts, calibration->features, calibration->logits);
      thresholds[v] = calibrate_threshold(id, config.target_tpr);
    }
  });

  const auto dir = config.output_dir / "scores" / file_label(request.split);
  fs::create_directories(dir);
  auto det = open_out(dir / "detections.tsv");
  for (std::size_t v = 0; v < variants.size(); ++v) {
    write_array(from_values(scores[v].scores), dir / (file_label(variants[v].label()) + ".npy"));
    write_detections(det, detect(scores[v], logits, thresholds[v]), variants[v], v == 0);
  }
  return scores;
}

EvalReport cmd_report(const fs::path& cells_tsv, const fs::path& out_dir) {
  std::ifstream in(cells_tsv);
  if (!in) throw ValidationError("cannot read " + cells_tsv.string());
  auto report = build_report(read_cells_tsv(in));
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "report.txt");
    write_text_table(out, report);
  }
  {
    auto out = open_out(out_dir / "chart.svg");
    write_svg_chart(out, report, "Mean AUROC and FPR95 per method");
  }
  {
    auto out = open_out(out_dir / "sweep_summary.tsv");
    write_sweep_summary(out, report);
  }
  return report;
}

}  // namespace ood
