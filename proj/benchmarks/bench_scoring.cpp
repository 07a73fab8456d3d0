#include <benchmark/benchmark.h>

#include <random>

#include "ood/artifacts.hpp"
#include "ood/detector.hpp"
#include "ood/diagnostics.hpp"
#include "ood/metrics.hpp"
#include "ood/pipeline.hpp"
#include "ood/synthetic.hpp"

namespace {

struct Fixture {
  ood::SyntheticData data;
  ood::CalibrationArtifacts artifacts;
  ood::RunConfig config;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    ood::SyntheticSpec s;
    s.classes = 10;
    s.dim = 64;
    s.train_per_class = 500;
    s.test_per_class = 1000;
    s.ood_samples = 10000;
    s.seed = 1;
    f.data = ood::generate_synthetic(s);
    f.config.react_tau = {1.0};
    f.config.dice_rho = {0.5};
    f.artifacts = ood::calibrate(f.data.train.features, f.data.train.logits, f.data.train.labels, f.data.head,
                                 f.config.fit_options());
    return f;
  }();
  return f;
}

void BM_Score(benchmark::State& state) {
  const auto& f = fixture();
  const auto method = ood::kAllMethods[state.range(0)];
  ood::MethodTag tag{method, std::nullopt};
  if (method == ood::Method::odin) tag.hyperparameter = 1000.0;
  if (method == ood::Method::react) tag.hyperparameter = 1.0;
  if (method == ood::Method::dice) tag.hyperparameter = 0.5;
  state.SetLabel(tag.label());
  for (auto _ : state) {
    auto s = ood::score_with(tag, f.config, f.artifacts, f.data.test.features, f.data.test.logits);
    benchmark::DoNotOptimize(s.scores.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.test.features.samples()));
}
BENCHMARK(BM_Score)->DenseRange(0, 9)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  const auto& f = fixture();
  ood::set_warning_sink([](std::string_view) {});
  for (auto _ : state) {
    auto a = ood::calibrate(f.data.train.features, f.data.train.logits, f.data.train.labels, f.data.head,
                            f.config.fit_options());
    benchmark::DoNotOptimize(a.train_accuracy);
  }
  ood::set_warning_sink(nullptr);
}
BENCHMARK(BM_Calibrate)->Unit(benchmark::kMillisecond);

std::vector<double> random_scores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto id = random_scores(n, 1), ood = random_scores(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ood::auroc(id, ood));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity(benchmark::oNLogN);

void BM_Threshold(benchmark::State& state) {
  const auto id = random_scores(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(ood::calibrate_lambda(id, 0.95));
}
BENCHMARK(BM_Threshold)->RangeMultiplier(10)->Range(1000, 1000000);

}  // namespace

BENCHMARK_MAIN();
