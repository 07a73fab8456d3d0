#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "ood/array_io.hpp"
#include "ood/detector.hpp"
#include "ood/error.hpp"
#include "ood/manifest.hpp"
#include "ood/pipeline.hpp"
#include "ood/synthetic.hpp"

using namespace ood;
namespace fs = std::filesystem;

namespace {

RunConfig setup(const fs::path& dir, SyntheticSpec spec = {}) {
  if (spec.train_per_class == 400) {
    spec.classes = 3;
    spec.dim = 8;
    spec.train_per_class = 80;
    spec.test_per_class = 60;
    spec.ood_samples = 150;
    spec.ood_shifts = {10.0};
    spec.seed = 9;
  }
  RunConfig c;
  c.manifest = write_synthetic(generate_synthetic(spec), dir / "data");
  c.output_dir = dir / "out";
  c.react_tau = {1.0, 2.0};
  c.dice_rho = {0.1, 0.5};
  return c;
}

std::vector<std::string> files_in(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Pipeline, VariantsExpandSweeps) {
  const auto c = setup(ood::testing::scratch_dir());
  const auto a = cmd_fit(c);
  const auto v = method_variants(c, a);
  EXPECT_EQ(v.size(), 12u);
  EXPECT_EQ(v[1].label(), "odin(T=1000)");
  EXPECT_EQ(v[8].label(), "react(tau=1)");
  EXPECT_EQ(v[11].label(), "dice(rho=0.5)");
}

TEST(Pipeline, FitThenEvalWritesAllReports) {
  const auto c = setup(ood::testing::scratch_dir());
  cmd_fit(c);
  EXPECT_TRUE(fs::exists(artifact_dir(c) / "index.json"));
  const auto report = cmd_eval(c);
  EXPECT_EQ(report.rows.size(), 12u);
  for (const char* f : {"cells.tsv", "report.txt", "chart.svg", "sweep_summary.tsv", "thresholds.tsv"})
    EXPECT_TRUE(fs::exists(report_dir(c) / f)) << f;
  EXPECT_GE(report.find_row("mahalanobis")->mean_auroc, 0.999);
  const auto summary = ood::testing::slurp(report_dir(c) / "sweep_summary.tsv");
  EXPECT_NE(summary.find("\nreact\t"), std::string::npos);
  EXPECT_NE(summary.find("\ndice\t"), std::string::npos);
}

TEST(Pipeline, ThresholdsMeetTheGuaranteeOnIdTest) {
  const auto c = setup(ood::testing::scratch_dir());
  const auto a = cmd_fit(c);
  cmd_eval(c);
  const auto manifest = load_manifest(c.manifest);
  const auto test = load_labeled_split(manifest.id_test);
  std::ifstream in(report_dir(c) / "thresholds.tsv");
  std::string line;
  std::getline(in, line);
  std::size_t checked = 0;
  for (const auto& tag : method_variants(c, a)) {
    ASSERT_TRUE(std::getline(in, line));
    const auto lambda = std::stod(line.substr(line.find('\t') + 1));
    const auto s = score_with(tag, c, a, test.features, test.logits).scores;
    const double accepted = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double x) { return x >= lambda; }));
    EXPECT_GE(accepted / s.size(), 0.95) << tag.label();
    EXPECT_LE(accepted / s.size(), 0.95 + 1.0 / s.size()) << tag.label();
    ++checked;
  }
  EXPECT_EQ(checked, 12u);
}

TEST(Pipeline, RerunsAreByteIdentical) {
  const auto root = ood::testing::scratch_dir();
  auto c = setup(root);
  c.jobs = 3;
  cmd_fit(c);
  cmd_eval(c);
  auto d = c;
  d.output_dir = root / "out2";
  d.jobs = 1;
  cmd_fit(d);
  cmd_eval(d);
  const auto files = files_in(c.output_dir);
  EXPECT_EQ(files, files_in(d.output_dir));
  for (const auto& f : files) EXPECT_EQ(ood::testing::slurp(c.output_dir / f), ood::testing::slurp(d.output_dir / f)) << f;
}

TEST(Pipeline, MissingArtifacts) {
  const auto c = setup(ood::testing::scratch_dir());
  try {
    cmd_eval(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run fit first"), std::string::npos);
  }
}

TEST(Pipeline, MethodNotFittedIsReported) {
  auto c = setup(ood::testing::scratch_dir());
  c.methods = {Method::energy};
  cmd_fit(c);
  c.methods = {Method::energy, Method::mahalanobis};
  EXPECT_THROW(cmd_eval(c), Error);
}

TEST(Pipeline, HeadDriftIsDetected) {
  const auto dir = ood::testing::scratch_dir();
  const auto c = setup(dir);
  cmd_fit(c);
  auto other = SyntheticSpec{};
  other.classes = 3;
  other.dim = 9;
  other.train_per_class = 20;
  other.test_per_class = 20;
  other.ood_samples = 20;
  auto d = c;
  d.manifest = write_synthetic(generate_synthetic(other), dir / "drift");
  try {
    cmd_eval(d);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension drift"), std::string::npos);
  }
}

TEST(Pipeline, SingleSampleOodSetIsFlaggedLowN) {
  SyntheticSpec s;
  s.classes = 3;
  s.dim = 8;
  s.train_per_class = 50;
  s.test_per_class = 50;
  s.ood_samples = 1;
  s.ood_shifts = {10.0};
  auto c = setup(ood::testing::scratch_dir(), s);
  cmd_fit(c);
  ood::testing::WarningCapture warnings;
  const auto report = cmd_eval(c);
  for (const auto& cell : report.cells) {
    EXPECT_TRUE(cell.low_n);
    EXPECT_EQ(cell.n_ood, 1u);
  }
  EXPECT_TRUE(warnings.contains("low-N"));
  EXPECT_NE(ood::testing::slurp(report_dir(c) / "report.txt").find("*"), std::string::npos);
}

TEST(Pipeline, HoldoutSplitsTheTestSet) {
  auto c = setup(ood::testing::scratch_dir());
  c.threshold_split = ThresholdSplit::holdout;
  c.holdout_fraction = 0.25;
  cmd_fit(c);
  const auto report = cmd_eval(c);
  EXPECT_EQ(report.cells.front().n_id, 135u);
  const auto thresholds = ood::testing::slurp(report_dir(c) / "thresholds.tsv");
  EXPECT_NE(thresholds.find("\t45\tholdout\n"), std::string::npos);
  c.holdout_fraction = 0.001;
  EXPECT_THROW(cmd_eval(c), ValidationError);
}

TEST(Pipeline, ScoreWritesArraysAndDetections) {
  const auto c = setup(ood::testing::scratch_dir());
  cmd_fit(c);
  const auto scores = cmd_score(c, {"ood_shift_10", std::nullopt});
  EXPECT_EQ(scores.size(), 12u);
  const auto dir = c.output_dir / "scores" / "ood_shift_10";
  EXPECT_TRUE(fs::exists(dir / "react_tau_1.npy"));
  EXPECT_TRUE(fs::exists(dir / "odin_T_1000.npy"));
  const auto back = to_vector(read_array(dir / "vim.npy"));
  ASSERT_EQ(static_cast<std::size_t>(back.size()), scores[7].scores.size());
  for (std::size_t i = 0; i < scores[7].scores.size(); ++i) EXPECT_EQ(back(static_cast<Eigen::Index>(i)), scores[7].scores[i]);
  const auto table = ood::testing::slurp(dir / "detections.tsv");
  EXPECT_EQ(table.find("sample_index"), 0u);
  EXPECT_EQ(table.find("sample_index", 1), std::string::npos);
  std::size_t lines = std::count(table.begin(), table.end(), '\n');
  EXPECT_EQ(lines, 1 + 12 * 150u);
}

TEST(Pipeline, ScoreWithFixedLambdaAndUnknownSplit) {
  const auto c = setup(ood::testing::scratch_dir());
  cmd_fit(c);
  const auto scores = cmd_score(c, {"id_train", 1e300});
  const auto table = ood::testing::slurp(c.output_dir / "scores" / "id_train" / "detections.tsv");
  EXPECT_EQ(table.find("\tin\t"), std::string::npos);
  EXPECT_THROW(cmd_score(c, {"nowhere", std::nullopt}), ValidationError);
}

TEST(Pipeline, ReportRerendersFromCells) {
  const auto c = setup(ood::testing::scratch_dir());
  cmd_fit(c);
  cmd_eval(c);
  const auto out = c.output_dir / "again";
  cmd_report(report_dir(c) / "cells.tsv", out);
  for (const char* f : {"report.txt", "chart.svg", "sweep_summary.tsv"})
    EXPECT_EQ(ood::testing::slurp(out / f), ood::testing::slurp(report_dir(c) / f)) << f;
}

TEST(Pipeline, ZeroShiftIsIndistinguishable) {
  SyntheticSpec s;
  s.classes = 3;
  s.dim = 8;
  s.train_per_class = 300;
  s.test_per_class = 1000;
  s.ood_samples = 3000;
  s.ood_shifts = {0.0};
  s.seed = 2;
  auto c = setup(ood::testing::scratch_dir(), s);
  cmd_fit(c);
  for (const auto& cell : cmd_eval(c).cells) {
    EXPECT_GT(cell.auroc, 0.45) << cell.method;
    EXPECT_LT(cell.auroc, 0.55) << cell.method;
  }
}
