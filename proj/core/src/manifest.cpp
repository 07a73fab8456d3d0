#include "ood/manifest.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ood/array_io.hpp"

namespace ood {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "invalid manifest (" << problems.size() << " problem" << (problems.size() == 1 ? "" : "s") << ")";
  for (const auto& p : problems) os << "\n  - " << p;
  return os.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_to(const fs::path& base, const fs::path& p) {
  const auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

// Collects problems instead of throwing so that one load reports all of them.
class Checker {
 public:
  std::optional<ArrayFile> read(const std::string& label, const fs::path& path) {
    if (!fs::exists(path)) {
      problems.push_back(label + ": missing file " + path.string());
      return std::nullopt;
    }
    try {
      return read_array(path);
    } catch (const Error& e) {
      problems.push_back(label + ": " + e.what());
      return std::nullopt;
    }
  }

  std::vector<std::string> problems;
};

struct ArrayInfo {
  std::string label;
  std::optional<ArrayFile> array;
};

void check_rank(Checker& c, const ArrayInfo& a, std::size_t rank) {
  if (a.array && a.array->rank() != rank)
    c.problems.push_back(a.label + ": expected rank " + std::to_string(rank) + ", got rank " +
                         std::to_string(a.array->rank()));
}

std::optional<std::size_t> extent(const ArrayInfo& a, std::size_t axis, std::size_t rank) {
  if (!a.array || a.array->rank() != rank) return std::nullopt;
  return a.array->shape[axis];
}

void check_equal(Checker& c, const ArrayInfo& a, std::optional<std::size_t> va, const char* what_a,
                 const ArrayInfo& b, std::optional<std::size_t> vb, const char* what_b) {
  if (va && vb && *va != *vb)
    c.problems.push_back("dimension mismatch: " + a.label + " " + what_a + " = " + std::to_string(*va) +
                         " but " + b.label + " " + what_b + " = " + std::to_string(*vb));
}

void check_split(Checker& c, const std::string& name, const fs::path& features, const fs::path& logits,
                 const fs::path* labels, const ArrayInfo& weight) {
  ArrayInfo f{name + ".features", c.read(name + ".features", features)};
  ArrayInfo z{name + ".logits", c.read(name + ".logits", logits)};
  check_rank(c, f, 2);
  check_rank(c, z, 2);
  check_equal(c, f, extent(f, 1, 2), "width", weight, extent(weight, 1, 2), "width");
  check_equal(c, z, extent(z, 1, 2), "class count", weight, extent(weight, 0, 2), "rows");
  check_equal(c, f, extent(f, 0, 2), "rows", z, extent(z, 0, 2), "rows");
  if (!labels) return;

  ArrayInfo y{name + ".labels", c.read(name + ".labels", *labels)};
  check_rank(c, y, 1);
  check_equal(c, f, extent(f, 0, 2), "rows", y, extent(y, 0, 1), "length");
  if (!y.array || y.array->rank() != 1) return;
  if (y.array->dtype() != DType::int64) {
    c.problems.push_back(y.label + ": labels must be 8-byte integers");
    return;
  }
  const auto classes = extent(weight, 0, 2);
  if (!classes) return;
  const auto& values = std::get<std::vector<std::int64_t>>(y.array->data);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || static_cast<std::size_t>(values[i]) >= *classes) {
      c.problems.push_back(y.label + ": label " + std::to_string(values[i]) + " at index " +
                           std::to_string(i) + " is out of range [0, " + std::to_string(*classes) + ")");
      break;
    }
  }
}

}  // namespace

ManifestError::ManifestError(std::vector<std::string> problems)
    : ValidationError(join_problems(problems)), problems_(std::move(problems)) {}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError({"missing manifest file " + path.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError({"manifest does not parse: " + std::string(e.what())});
  }

  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest m;
  m.source = fs::absolute(path);
  std::vector<std::string> problems;

  auto get_path = [&](const json& obj, const char* key, const std::string& where) -> fs::path {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string()) {
      problems.push_back(where + "." + key + ": missing or not a string");
      return {};
    }
    return resolve(base, obj[key].get<std::string>());
  };

  auto split = [&](const char* name) {
    LabeledSplitPaths s;
    const json& obj = doc.contains(name) ? doc[name] : json();
    s.features = get_path(obj, "features", name);
    s.logits = get_path(obj, "logits", name);
    s.labels = get_path(obj, "labels", name);
    return s;
  };

  m.id_train = split("id_train");
  m.id_test = split("id_test");
  const json& head = doc.contains("head") ? doc["head"] : json();
  m.head.weight = get_path(head, "weight", "head");
  m.head.bias = get_path(head, "bias", "head");

  if (doc.contains("ood_sets")) {
    if (!doc["ood_sets"].is_array()) {
      problems.push_back("ood_sets: must be an array");
    } else {
      for (std::size_t i = 0; i < doc["ood_sets"].size(); ++i) {
        const json& o = doc["ood_sets"][i];
        const std::string where = "ood_sets[" + std::to_string(i) + "]";
        OodSetPaths s;
        if (o.is_object() && o.contains("name") && o["name"].is_string()) {
          s.name = o["name"].get<std::string>();
        } else {
          problems.push_back(where + ".name: missing or not a string");
        }
        if (o.is_object() && o.contains("group") && o["group"].is_string()) s.group = o["group"].get<std::string>();
        s.features = get_path(o, "features", where);
        s.logits = get_path(o, "logits", where);
        for (const auto& prev : m.ood_sets)
          if (!s.name.empty() && prev.name == s.name) problems.push_back(where + ": duplicate name '" + s.name + "'");
        m.ood_sets.push_back(std::move(s));
      }
    }
  }
  if (doc.contains("class_names")) {
    if (!doc["class_names"].is_array()) {
      problems.push_back("class_names: must be an array of strings");
    } else {
      for (const auto& n : doc["class_names"]) {
        if (!n.is_string()) {
          problems.push_back("class_names: must be an array of strings");
          break;
        }
        m.class_names.push_back(n.get<std::string>());
      }
    }
  }
  if (!problems.empty()) throw ManifestError(std::move(problems));

  Checker c;
  ArrayInfo weight{"head.weight", c.read("head.weight", m.head.weight)};
  ArrayInfo bias{"head.bias", c.read("head.bias", m.head.bias)};
  check_rank(c, weight, 2);
  check_rank(c, bias, 1);
  check_equal(c, bias, extent(bias, 0, 1), "length", weight, extent(weight, 0, 2), "rows");
  if (const auto classes = extent(weight, 0, 2)) {
    m.num_classes = *classes;
    m.feature_dim = *extent(weight, 1, 2);
    if (m.num_classes == 0) c.problems.push_back("head.weight: zero classes");
    if (!m.class_names.empty() && m.class_names.size() != m.num_classes)
      c.problems.push_back("class_names: " + std::to_string(m.class_names.size()) +
                           " names but head.weight has " + std::to_string(m.num_classes) + " rows");
  }
  check_split(c, "id_train", m.id_train.features, m.id_train.logits, &m.id_train.labels, weight);
  check_split(c, "id_test", m.id_test.features, m.id_test.logits, &m.id_test.labels, weight);
  for (const auto& o : m.ood_sets) check_split(c, "ood_sets." + o.name, o.features, o.logits, nullptr, weight);

  if (!c.problems.empty()) throw ManifestError(std::move(c.problems));
  if (m.class_names.empty())
    for (std::size_t i = 0; i < m.num_classes; ++i) m.class_names.push_back("class_" + std::to_string(i));
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) { return relative_to(base, fs::absolute(p)); };
  auto split = [&](const LabeledSplitPaths& s) {
    return json{{"features", rel(s.features)}, {"logits", rel(s.logits)}, {"labels", rel(s.labels)}};
  };
  json doc;
  doc["id_train"] = split(m.id_train);
  doc["id_test"] = split(m.id_test);
  doc["head"] = {{"weight", rel(m.head.weight)}, {"bias", rel(m.head.bias)}};
  doc["ood_sets"] = json::array();
  for (const auto& o : m.ood_sets) {
    json entry{{"name", o.name}, {"features", rel(o.features)}, {"logits", rel(o.logits)}};
    if (!o.group.empty()) entry["group"] = o.group;
    doc["ood_sets"].push_back(std::move(entry));
  }
  doc["class_names"] = m.class_names;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

LabeledSplit load_labeled_split(const LabeledSplitPaths& paths) {
  LabeledSplit s;
  s.features.values = to_matrix(read_array(paths.features));
  s.logits.values = to_matrix(read_array(paths.logits));
  s.labels = to_labels(read_array(paths.labels));
  return s;
}

OodSplit load_ood_split(const OodSetPaths& paths) {
  OodSplit s;
  s.name = paths.name;
  s.group = paths.group;
  s.features.values = to_matrix(read_array(paths.features));
  s.logits.values = to_matrix(read_array(paths.logits));
  return s;
}

ClassifierHead load_head(const HeadPaths& paths) {
  ClassifierHead h;
  h.weight = to_matrix(read_array(paths.weight));
  h.bias = to_vector(read_array(paths.bias));
  return h;
}

}  // namespace ood
