#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ood {

struct EvalCell {
  std::string method;  // full tag label, e.g. "react(tau=1.75)"
  std::string family;  // base method name, e.g. "react"
  std::optional<double> hyperparameter;
  std::string ood_dataset;
  std::string group;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double lambda = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  bool low_n = false;
};

/// Cells are flagged low-N below this many samples on either side.
inline constexpr std::size_t kLowSampleCount = 20;

struct ReportRow {
  std::string method;
  std::string family;
  std::optional<double> hyperparameter;
  std::map<std::string, std::size_t> cells;  // ood_dataset -> index into EvalReport::cells
  double mean_fpr95 = 0.0;
  double mean_auroc = 0.0;
  std::map<std::string, std::pair<double, double>> group_means;  // group -> (fpr95, auroc)
};

struct EvalReport {
  std::vector<EvalCell> cells;  // sorted by (method, ood_dataset)
  std::vector<std::string> datasets;
  std::vector<std::string> groups;
  std::vector<ReportRow> rows;  // sorted by method label

  const ReportRow* find_row(const std::string& method) const;
};

/// Groups cells by method and appends per-method means. Throws
/// ValidationError on a duplicate (method, dataset) pair.
EvalReport build_report(std::vector<EvalCell> cells);

/// Best member of every swept family (more than one hyperparameter value):
/// minimal mean FPR95, then higher mean AUROC, then smaller hyperparameter.
std::vector<const ReportRow*> best_per_family(const EvalReport& report);

void write_cells_tsv(std::ostream& out, const EvalReport& report);
std::vector<EvalCell> read_cells_tsv(std::istream& in);

/// Aligned text table, "FPR95 / AUROC" percentages with one decimal.
void write_text_table(std::ostream& out, const EvalReport& report);

void write_sweep_summary(std::ostream& out, const EvalReport& report);

/// Grouped bar chart of mean AUROC and FPR95 per method, one panel per OOD
/// group (or a single "all" panel when no groups are set).
void write_svg_chart(std::ostream& out, const EvalReport& report, const std::string& title);

}  // namespace ood
