#include "ood/categories.hpp"

#include <cctype>
#include <map>
#include <ostream>

namespace ood {

std::string normalize_category(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char raw : name) {
    const auto ch = static_cast<unsigned char>(raw);
    if (raw == '_' || std::isspace(ch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

CategoryFilterResult filter_overlap(const std::vector<std::string>& ood_categories,
                                    const std::vector<std::string>& id_categories,
                                    const std::vector<std::string>& external_removals) {
  std::map<std::string, std::string> id_index;
  for (const auto& id : id_categories) id_index.emplace(normalize_category(id), id);
  std::map<std::string, std::string> external;
  for (const auto& e : external_removals) external.emplace(normalize_category(e), e);

  CategoryFilterResult result;
  for (const auto& ood : ood_categories) {
    const auto key = normalize_category(ood);
    if (const auto it = id_index.find(key); it != id_index.end()) {
      result.removed.push_back({ood, it->second, "exact"});
    } else if (const auto ext = external.find(key); ext != external.end()) {
      result.removed.push_back({ood, ext->second, "external"});
    } else {
      result.kept.push_back(ood);
    }
  }
  return result;
}

void write_removal_log(std::ostream& out, const CategoryFilterResult& result) {
  out << "ood_category\tmatched\treason\n";
  for (const auto& r : result.removed) out << r.ood_category << '\t' << r.matched << '\t' << r.reason << '\n';
}

}  // namespace ood
