#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ood {

struct CategoryRemoval {
  std::string ood_category;
  std::string matched;  // the ID category, or the external list entry
  std::string reason;   // "exact" or "external"
};

struct CategoryFilterResult {
  std::vector<std::string> kept;
  std::vector<CategoryRemoval> removed;
};

/// Lower-cases, maps '_' to ' ', trims and collapses runs of whitespace.
std::string normalize_category(std::string_view name);

/// Drops OOD categories whose normalized name equals a normalized ID name.
/// Entries of `external_removals` (e.g. produced by a semantic review) are
/// removed as well and logged with reason "external".
CategoryFilterResult filter_overlap(const std::vector<std::string>& ood_categories,
                                    const std::vector<std::string>& id_categories,
                                    const std::vector<std::string>& external_removals = {});

void write_removal_log(std::ostream& out, const CategoryFilterResult& result);

}  // namespace ood
