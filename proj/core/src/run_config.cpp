#include "ood/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ood/error.hpp"

namespace ood {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Section = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& obj, const std::string& where, const Section& handlers) {
  if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ValidationError("unknown config key '" + where + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ValidationError("config key '" + where + "." + key + "' has the wrong type: " + e.what());
    }
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

bool RunConfig::uses(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.gaussian = uses(Method::mahalanobis);
  o.shrinkage = mahalanobis_shrinkage;
  o.weibull = uses(Method::openmax);
  o.tail_size = openmax_tail_size;
  o.weibull_variable = openmax_eval;
  o.templates = uses(Method::kl_matching);
  o.template_epsilon = kl_epsilon;
  o.template_grouping = kl_group_by;
  o.vim = uses(Method::vim);
  o.principal_dim = vim_principal_dim;
  if (uses(Method::dice)) o.dice_rho = dice_rho;
  if (uses(Method::react)) {
    o.react_tau = react_tau;
    o.react_percentiles = react_percentiles;
  }
  return o;
}

void RunConfig::validate() const {
  require(!methods.empty(), "config selects no methods");
  for (std::size_t i = 0; i < methods.size(); ++i)
    for (std::size_t j = i + 1; j < methods.size(); ++j)
      require(methods[i] != methods[j], "method '" + std::string(method_name(methods[i])) + "' is listed twice");
  require(odin_temperature > 0.0 && std::isfinite(odin_temperature), "odin.temperature must be finite and > 0");
  require(openmax_tail_size >= 3, "openmax.tail_size must be >= 3");
  require(openmax_alpha_top >= 1, "openmax.alpha_top must be >= 1");
  require(kl_epsilon >= 0.0 && kl_epsilon < 1.0, "kl_matching.epsilon must lie in [0, 1)");
  require(mahalanobis_shrinkage >= 0.0, "mahalanobis.shrinkage must be >= 0");
  for (double t : react_tau) require(!std::isnan(t), "react.tau entries must be numbers");
  for (double p : react_percentiles) require(p > 0.0 && p < 1.0, "react.percentiles entries must lie in (0, 1)");
  for (double r : dice_rho) require(r >= 0.0 && r <= 1.0, "dice.rho entries must lie in [0, 1]");
  if (uses(Method::react))
    require(!react_tau.empty() || !react_percentiles.empty(), "react needs at least one tau or percentile");
  if (uses(Method::dice)) require(!dice_rho.empty(), "dice needs at least one rho");
  require(target_tpr > 0.0 && target_tpr < 1.0, "target_tpr must lie in (0, 1)");
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout_fraction must lie in (0, 1)");
}

std::size_t RunConfig::effective_jobs() const {
  if (jobs > 0) return jobs;
  if (const char* env = std::getenv("OODBENCH_JOBS")) {
    char* end = nullptr;
    const auto v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return 1;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("config does not parse: " + std::string(e.what()));
  }
  RunConfig c;
  const Section odin{{"temperature", [&](const json& v) { c.odin_temperature = v.get<double>(); }}};
  const Section openmax{
      {"tail_size", [&](const json& v) { c.openmax_tail_size = v.get<std::size_t>(); }},
      {"alpha_top", [&](const json& v) { c.openmax_alpha_top = v.get<std::size_t>(); }},
      {"eval", [&](const json& v) {
         const auto s = v.get<std::string>();
         require(s == "distance" || s == "logit", "openmax.eval must be \"distance\" or \"logit\"");
         c.openmax_eval = s == "distance" ? WeibullVariable::distance : WeibullVariable::logit;
       }}};
  const Section kl{
      {"epsilon", [&](const json& v) { c.kl_epsilon = v.get<double>(); }},
      {"group_by", [&](const json& v) {
         const auto s = v.get<std::string>();
         require(s == "predicted" || s == "label", "kl_matching.group_by must be \"predicted\" or \"label\"");
         c.kl_group_by = s == "predicted" ? TemplateGrouping::predicted : TemplateGrouping::label;
       }}};
  const Section maha{{"shrinkage", [&](const json& v) { c.mahalanobis_shrinkage = v.get<double>(); }}};
  const Section vim{{"principal_dim", [&](const json& v) { c.vim_principal_dim = v.get<std::size_t>(); }}};
  const Section react{
      {"tau", [&](const json& v) {
         c.react_tau.clear();
         for (const auto& t : v) {
           if (t.is_string() && (t == "inf" || t == "infinity")) {
             c.react_tau.push_back(std::numeric_limits<double>::infinity());
           } else {
             c.react_tau.push_back(t.get<double>());
           }
         }
       }},
      {"percentiles", [&](const json& v) { c.react_percentiles = v.get<std::vector<double>>(); }}};
  const Section dice{{"rho", [&](const json& v) { c.dice_rho = v.get<std::vector<double>>(); }}};

  const Section top{
      {"manifest", [&](const json& v) { c.manifest = resolve(base_dir, v.get<std::string>()); }},
      {"output_dir", [&](const json& v) { c.output_dir = resolve(base_dir, v.get<std::string>()); }},
      {"methods", [&](const json& v) {
         require(v.is_array(), "methods must be an array of method names");
         c.methods.clear();
         for (const auto& m : v) {
           const auto name = m.get<std::string>();
           const auto parsed = parse_method(name);
           require(parsed.has_value(), "unknown method '" + name + "'");
           c.methods.push_back(*parsed);
         }
       }},
      {"target_tpr", [&](const json& v) { c.target_tpr = v.get<double>(); }},
      {"threshold_split", [&](const json& v) {
         const auto s = v.get<std::string>();
         require(s == "id_test" || s == "holdout", "threshold_split must be \"id_test\" or \"holdout\"");
         c.threshold_split = s == "id_test" ? ThresholdSplit::id_test : ThresholdSplit::holdout;
       }},
      {"holdout_fraction", [&](const json& v) { c.holdout_fraction = v.get<double>(); }},
      {"seed", [&](const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"jobs", [&](const json& v) { c.jobs = v.get<std::size_t>(); }},
      {"odin", [&](const json& v) { apply(v, "odin", odin); }},
      {"openmax", [&](const json& v) { apply(v, "openmax", openmax); }},
      {"kl_matching", [&](const json& v) { apply(v, "kl_matching", kl); }},
      {"mahalanobis", [&](const json& v) { apply(v, "mahalanobis", maha); }},
      {"vim", [&](const json& v) { apply(v, "vim", vim); }},
      {"react", [&](const json& v) { apply(v, "react", react); }},
      {"dice", [&](const json& v) { apply(v, "dice", dice); }},
  };
  apply(doc, "config", top);
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::absolute(path).parent_path());
}

}  // namespace ood
