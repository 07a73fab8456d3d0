// oodbench: fit, score and evaluate post-hoc OOD detectors on exported
// feature/logit arrays.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ood/categories.hpp"
#include "ood/error.hpp"
#include "ood/pipeline.hpp"
#include "ood/run_config.hpp"
#include "ood/synthetic.hpp"

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string out;
};

ood::RunConfig make_config(const Globals& g, const std::string& manifest) {
  ood::RunConfig c;
  if (!g.config.empty()) c = ood::load_run_config(g.config);
  if (!manifest.empty()) c.manifest = manifest;
  if (g.seed) c.seed = *g.seed;
  if (g.jobs) c.jobs = *g.jobs;
  if (!g.out.empty()) c.output_dir = g.out;
  if (c.manifest.empty()) throw ood::ValidationError("no manifest given; set it in --config or pass --manifest");
  c.validate();
  return c;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ood::ValidationError("cannot read " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-hoc out-of-distribution detection benchmark"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
  app.add_option("--jobs", g.jobs, "worker threads (overrides OODBENCH_JOBS and the config)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");

  std::string manifest;
  auto* fit = app.add_subcommand("fit", "fit calibration artifacts on the ID training split");
  fit->add_option("--manifest", manifest, "dataset manifest (overrides the config)");

  auto* eval = app.add_subcommand("eval", "score ID test and OOD sets, write FPR95/AUROC reports");
  eval->add_option("--manifest", manifest, "dataset manifest (overrides the config)");

  ood::ScoreRequest request;
  double lambda = 0.0;
  auto* score = app.add_subcommand("score", "score one split and write thresholded detections");
  score->add_option("--manifest", manifest, "dataset manifest (overrides the config)");
  score->add_option("--split", request.split, "id_test, id_train or an OOD set name");
  auto* lambda_opt = score->add_option("--lambda", lambda, "fixed cutoff instead of calibrating on id_test");

  ood::SyntheticSpec spec;
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic Gaussian dataset and manifest");
  synth->add_option("--classes", spec.classes)->check(CLI::PositiveNumber);
  synth->add_option("--dim", spec.dim)->check(CLI::PositiveNumber);
  synth->add_option("--n-per-class", spec.train_per_class, "training samples per class");
  synth->add_option("--n-test-per-class", spec.test_per_class, "test samples per class");
  synth->add_option("--n-ood", spec.ood_samples, "samples per OOD set");
  synth->add_option("--separation", spec.separation, "distance of class means from the origin");
  synth->add_option("--scale", spec.scale, "within-class standard deviation");
  synth->add_option("--ood-shift", spec.ood_shifts, "OOD shift in within-class scales (repeatable)")
      ->take_all();
  synth->add_option("--rank", spec.intrinsic_rank, "coordinates with full variance (0 = all)");
  synth->add_option("--residual-scale", spec.residual_scale, "relative std of the remaining coordinates");
  synth->add_option("--ood-mean-decay", spec.ood_mean_decay, "fraction of the class mean removed from OOD samples")
      ->check(CLI::Range(0.0, 1.0));

  std::string ood_list, id_list, external_list;
  auto* filter = app.add_subcommand("filter-categories", "drop OOD categories whose names match ID categories");
  filter->add_option("--ood", ood_list, "OOD category names, one per line")->required()->check(CLI::ExistingFile);
  filter->add_option("--id", id_list, "ID category names, one per line")->required()->check(CLI::ExistingFile);
  filter->add_option("--external", external_list, "extra removals from an outside review, one per line")
      ->check(CLI::ExistingFile);

  std::string cells;
  auto* report = app.add_subcommand("report", "re-render tables and chart from a cells.tsv file");
  report->add_option("--cells", cells, "cells.tsv written by eval")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const auto c = make_config(g, manifest);
      const auto a = ood::cmd_fit(c);
      std::printf("fitted %zu training samples (train accuracy %.4f) into %s\n", a.train_samples, a.train_accuracy,
                  ood::artifact_dir(c).string().c_str());
    } else if (*eval) {
      const auto c = make_config(g, manifest);
      const auto r = ood::cmd_eval(c);
      std::printf("evaluated %zu method variants on %zu OOD sets; report in %s\n", r.rows.size(), r.datasets.size(),
                  ood::report_dir(c).string().c_str());
    } else if (*score) {
      const auto c = make_config(g, manifest);
      if (*lambda_opt) request.lambda = lambda;
      const auto s = ood::cmd_score(c, request);
      std::printf("wrote %zu score vectors for split %s\n", s.size(), request.split.c_str());
    } else if (*synth) {
      if (g.seed) spec.seed = *g.seed;
      const std::string dir = g.out.empty() ? "synthetic" : g.out;
      const auto path = ood::write_synthetic(ood::generate_synthetic(spec), dir);
      std::printf("%s\n", path.string().c_str());
    } else if (*filter) {
      const auto result = ood::filter_overlap(read_lines(ood_list), read_lines(id_list),
                                              external_list.empty() ? std::vector<std::string>{}
                                                                    : read_lines(external_list));
      if (g.out.empty()) {
        for (const auto& k : result.kept) std::cout << k << '\n';
        ood::write_removal_log(std::cerr, result);
      } else {
        std::filesystem::create_directories(g.out);
        std::ofstream kept(std::filesystem::path(g.out) / "filtered.txt");
        for (const auto& k : result.kept) kept << k << '\n';
        std::ofstream log(std::filesystem::path(g.out) / "removal_log.tsv");
        ood::write_removal_log(log, result);
        std::printf("kept %zu, removed %zu\n", result.kept.size(), result.removed.size());
      }
    } else if (*report) {
      const std::string dir = g.out.empty() ? "." : g.out;
      const auto r = ood::cmd_report(cells, dir);
      std::printf("rendered %zu rows into %s\n", r.rows.size(), dir.c_str());
    }
  } catch (const ood::ValidationError& e) {
    std::fprintf(stderr, "oodbench: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "oodbench: %s\n", e.what());
    return 2;
  }
  return 0;
}
