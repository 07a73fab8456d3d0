#include "ood/artifacts.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <openssl/evp.h>

#include "ood/array_io.hpp"
#include "ood/error.hpp"
#include "ood/numeric.hpp"

namespace ood {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIndexName = "index.json";
constexpr const char* kFormat = "oodbench-artifacts";
constexpr int kVersion = 1;

const char* variable_name(WeibullVariable v) { return v == WeibullVariable::distance ? "distance" : "logit"; }
const char* grouping_name(TemplateGrouping g) { return g == TemplateGrouping::predicted ? "predicted" : "label"; }

WeibullVariable parse_variable(const std::string& s) {
  if (s == "distance") return WeibullVariable::distance;
  if (s == "logit") return WeibullVariable::logit;
  throw ValidationError("unknown Weibull variable '" + s + "'");
}

TemplateGrouping parse_grouping(const std::string& s) {
  if (s == "predicted") return TemplateGrouping::predicted;
  if (s == "label") return TemplateGrouping::label;
  throw ValidationError("unknown template grouping '" + s + "'");
}

// JSON has no infinity; an unbounded ReAct tau is stored as the string "inf".
json encode_tau(double t) { return std::isinf(t) ? json(t > 0 ? "inf" : "-inf") : json(t); }

double decode_tau(const json& j) {
  if (j.is_string()) {
    if (j == "inf") return std::numeric_limits<double>::infinity();
    if (j == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("bad tau value in artifact index");
  }
  return j.get<double>();
}

json encode_taus(const std::vector<double>& v) {
  json out = json::array();
  for (double t : v) out.push_back(encode_tau(t));
  return out;
}

std::vector<double> decode_taus(const json& j) {
  std::vector<double> out;
  for (const auto& t : j) out.push_back(decode_tau(t));
  return out;
}

ArrayFile from_sizes(const std::vector<std::size_t>& v) {
  Labels out(v.begin(), v.end());
  return from_labels(out);
}

ArrayFile from_flags(const std::vector<bool>& v) {
  Labels out(v.begin(), v.end());
  return from_labels(out);
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  std::string put(const std::string& name, const ArrayFile& a) {
    write_array(a, dir_ / name);
    files_[name] = sha256_file(dir_ / name);
    return name;
  }

  const json& files() const { return files_; }

 private:
  fs::path dir_;
  json files_ = json::object();
};

class Reader {
 public:
  Reader(fs::path dir, const json& files) : dir_(std::move(dir)), files_(files) {}

  ArrayFile get(const json& name) const {
    const auto file = name.get<std::string>();
    if (!files_.contains(file)) throw ValidationError("artifact index does not list " + file);
    const auto path = dir_ / file;
    if (!fs::exists(path)) throw Error("missing artifact file " + path.string());
    if (sha256_file(path) != files_[file].get<std::string>())
      throw Error("content hash mismatch for artifact file " + path.string());
    return read_array(path);
  }

 private:
  fs::path dir_;
  const json& files_;
};

json options_json(const FitOptions& o) {
  return json{
      {"shrinkage", o.shrinkage},
      {"tail_size", o.tail_size},
      {"weibull_variable", variable_name(o.weibull_variable)},
      {"template_epsilon", o.template_epsilon},
      {"template_grouping", grouping_name(o.template_grouping)},
      {"principal_dim", o.principal_dim},
      {"dice_rho", o.dice_rho},
      {"react_tau", encode_taus(o.react_tau)},
      {"react_percentiles", o.react_percentiles},
      {"fit", {{"gaussian", o.gaussian}, {"weibull", o.weibull}, {"templates", o.templates}, {"vim", o.vim}}},
  };
}

FitOptions options_from_json(const json& j) {
  FitOptions o;
  o.shrinkage = j.at("shrinkage").get<double>();
  o.tail_size = j.at("tail_size").get<std::size_t>();
  o.weibull_variable = parse_variable(j.at("weibull_variable").get<std::string>());
  o.template_epsilon = j.at("template_epsilon").get<double>();
  o.template_grouping = parse_grouping(j.at("template_grouping").get<std::string>());
  o.principal_dim = j.at("principal_dim").get<std::size_t>();
  o.dice_rho = j.at("dice_rho").get<std::vector<double>>();
  o.react_tau = decode_taus(j.at("react_tau"));
  o.react_percentiles = j.at("react_percentiles").get<std::vector<double>>();
  const auto& fit = j.at("fit");
  o.gaussian = fit.at("gaussian").get<bool>();
  o.weibull = fit.at("weibull").get<bool>();
  o.templates = fit.at("templates").get<bool>();
  o.vim = fit.at("vim").get<bool>();
  return o;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof b, "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

CalibrationArtifacts calibrate(const FeatureMatrix& features, const LogitMatrix& logits, const Labels& labels,
                               const ClassifierHead& head, const FitOptions& options) {
  if (features.samples() != logits.samples() || features.samples() != labels.size())
    throw ValidationError("training features, logits and labels are not row-aligned");
  if (features.dim() != head.dim() || logits.classes() != head.classes())
    throw ValidationError("training arrays do not match the classifier head dimensions");
  require_finite(features.values, "training features");
  require_finite(logits.values, "training logits");

  CalibrationArtifacts a;
  a.head = head;
  a.options = options;
  a.train_samples = features.samples();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.values.rows(); ++i)
    if (argmax(row_span(logits.values, i)) == static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])) ++correct;
  a.train_accuracy = a.train_samples ? static_cast<double>(correct) / static_cast<double>(a.train_samples) : 0.0;

  if (options.gaussian) a.gaussian = fit_gaussian(features, labels, head.classes(), options.shrinkage);
  if (options.weibull)
    a.weibull = fit_weibull_tails(features, logits, labels, options.tail_size, options.weibull_variable);
  if (options.templates)
    a.templates = fit_templates(logits, options.template_epsilon, options.template_grouping, &labels);
  if (options.vim) {
    const auto dim = options.principal_dim ? options.principal_dim : features.dim() / 2;
    a.vim = fit_vim(features, head, dim);
    a.options.principal_dim = dim;
  }
  for (double rho : options.dice_rho) a.dice.push_back(fit_dice_mask(features, head, rho));
  for (double tau : options.react_tau) a.react.push_back({tau, std::nullopt});
  for (double p : options.react_percentiles) a.react.push_back({fit_react_threshold(features, p), p});
  return a;
}

void save_artifacts(const CalibrationArtifacts& a, const fs::path& dir) {
  fs::create_directories(dir);
  // Drop leftovers from an earlier fit with a different component set.
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".npy" || entry.path().filename() == kIndexName)) fs::remove(entry.path());
  }
  Writer w(dir);
  json index;
  index["format"] = kFormat;
  index["version"] = kVersion;
  index["feature_dim"] = a.head.dim();
  index["num_classes"] = a.head.classes();
  index["train_samples"] = a.train_samples;
  index["train_accuracy"] = a.train_accuracy;
  index["hyperparameters"] = options_json(a.options);
  index["head"] = {{"weight", w.put("head_weight.npy", from_matrix(a.head.weight))},
                   {"bias", w.put("head_bias.npy", from_vector(a.head.bias))}};
  if (a.gaussian) {
    index["gaussian"] = {{"means", w.put("gaussian_means.npy", from_matrix(a.gaussian->means))},
                         {"precision", w.put("gaussian_precision.npy", from_matrix(a.gaussian->precision))},
                         {"shrinkage", a.gaussian->shrinkage}};
  }
  if (a.weibull) {
    const auto& t = *a.weibull;
    index["weibull"] = {{"mav", w.put("weibull_mav.npy", from_matrix(t.mav))},
                        {"scale", w.put("weibull_scale.npy", from_values(t.scale))},
                        {"shape", w.put("weibull_shape.npy", from_values(t.shape))},
                        {"tail_count", w.put("weibull_tail_count.npy", from_sizes(t.tail_count))},
                        {"clamped", w.put("weibull_clamped.npy", from_flags(t.clamped))},
                        {"tail_size", t.tail_size},
                        {"variable", variable_name(t.variable)}};
  }
  if (a.templates) {
    index["templates"] = {{"q", w.put("templates.npy", from_matrix(a.templates->q))},
                          {"epsilon", a.templates->epsilon},
                          {"grouping", grouping_name(a.templates->grouping)}};
  }
  if (a.vim) {
    index["vim"] = {{"offset", w.put("vim_offset.npy", from_vector(a.vim->offset))},
                    {"residual_basis", w.put("vim_residual_basis.npy", from_matrix(a.vim->residual_basis))},
                    {"alpha", a.vim->alpha},
                    {"principal_dim", a.vim->principal_dim}};
  }
  if (!a.dice.empty()) {
    index["dice"] = json::array();
    for (std::size_t i = 0; i < a.dice.size(); ++i) {
      const auto& m = a.dice[i];
      const auto tag = std::to_string(i);
      index["dice"].push_back({{"rho", m.rho},
                               {"mask", w.put("dice_mask_" + tag + ".npy", from_matrix(m.mask))},
                               {"mean_activation", w.put("dice_mean_activation_" + tag + ".npy", from_vector(m.mean_activation))}});
    }
  }
  index["react"] = json::array();
  for (const auto& r : a.react) {
    json entry{{"tau", encode_tau(r.tau)}};
    if (r.percentile) entry["percentile"] = *r.percentile;
    index["react"].push_back(std::move(entry));
  }
  index["files"] = w.files();

  std::ofstream out(dir / kIndexName, std::ios::trunc);
  if (!out) throw Error("cannot write artifact index in " + dir.string());
  out << index.dump(2) << '\n';
}

CalibrationArtifacts load_artifacts(const fs::path& dir) {
  std::ifstream in(dir / kIndexName);
  if (!in) throw Error("missing artifact index " + (dir / kIndexName).string());
  json index;
  try {
    index = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("artifact index does not parse: " + std::string(e.what()));
  }
  if (index.value("format", "") != kFormat || index.value("version", 0) != kVersion)
    throw ValidationError("unrecognized artifact index format in " + dir.string());

  try {
    Reader r(dir, index.at("files"));
    CalibrationArtifacts a;
    a.options = options_from_json(index.at("hyperparameters"));
    a.train_samples = index.at("train_samples").get<std::size_t>();
    a.train_accuracy = index.at("train_accuracy").get<double>();
    a.head.weight = to_matrix(r.get(index.at("head").at("weight")));
    a.head.bias = to_vector(r.get(index.at("head").at("bias")));
    if (index.contains("gaussian")) {
      const auto& g = index["gaussian"];
      a.gaussian = GaussianStats{to_matrix(r.get(g.at("means"))), to_matrix(r.get(g.at("precision"))),
                                 g.at("shrinkage").get<double>()};
    }
    if (index.contains("weibull")) {
      const auto& j = index["weibull"];
      WeibullTails t;
      t.mav = to_matrix(r.get(j.at("mav")));
      const Vector scale = to_vector(r.get(j.at("scale")));
      const Vector shape = to_vector(r.get(j.at("shape")));
      t.scale.assign(scale.data(), scale.data() + scale.size());
      t.shape.assign(shape.data(), shape.data() + shape.size());
      for (auto v : to_labels(r.get(j.at("tail_count")))) t.tail_count.push_back(static_cast<std::size_t>(v));
      for (auto v : to_labels(r.get(j.at("clamped")))) t.clamped.push_back(v != 0);
      t.tail_size = j.at("tail_size").get<std::size_t>();
      t.variable = parse_variable(j.at("variable").get<std::string>());
      a.weibull = std::move(t);
    }
    if (index.contains("templates")) {
      const auto& j = index["templates"];
      a.templates = PosteriorTemplates{to_matrix(r.get(j.at("q"))), j.at("epsilon").get<double>(),
                                       parse_grouping(j.at("grouping").get<std::string>())};
    }
    if (index.contains("vim")) {
      const auto& j = index["vim"];
      a.vim = VimSubspace{to_vector(r.get(j.at("offset"))), to_matrix(r.get(j.at("residual_basis"))),
                          j.at("alpha").get<double>(), j.at("principal_dim").get<std::size_t>()};
    }
    if (index.contains("dice")) {
      for (const auto& j : index["dice"]) {
        a.dice.push_back(DiceMask{to_matrix(r.get(j.at("mask"))), j.at("rho").get<double>(),
                                  to_vector(r.get(j.at("mean_activation")))});
      }
    }
    for (const auto& j : index.at("react")) {
      ReactThreshold t{decode_tau(j.at("tau")), std::nullopt};
      if (j.contains("percentile")) t.percentile = j["percentile"].get<double>();
      a.react.push_back(t);
    }
    return a;
  } catch (const json::exception& e) {
    throw ValidationError("artifact index in " + dir.string() + " is incomplete: " + e.what());
  }
}

}  // namespace ood
