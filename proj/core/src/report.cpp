#include "ood/report.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "ood/error.hpp"
#include "ood/scoring.hpp"

namespace ood {
namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::size_t family_rank(const std::string& family) {
  std::size_t r = 0;
  for (auto m : kAllMethods) {
    if (method_name(m) == family) return r;
    ++r;
  }
  return r;
}

auto row_key(const std::string& family, const std::optional<double>& h, const std::string& method) {
  return std::make_tuple(family_rank(family), family, h.has_value(), h.value_or(0.0), method);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const ReportRow* EvalReport::find_row(const std::string& method) const {
  for (const auto& r : rows)
    if (r.method == method) return &r;
  return nullptr;
}

EvalReport build_report(std::vector<EvalCell> cells) {
  EvalReport report;
  report.cells = std::move(cells);
  std::sort(report.cells.begin(), report.cells.end(), [](const EvalCell& a, const EvalCell& b) {
    return std::make_tuple(row_key(a.family, a.hyperparameter, a.method), a.ood_dataset) <
           std::make_tuple(row_key(b.family, b.hyperparameter, b.method), b.ood_dataset);
  });

  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, std::string> dataset_group;
  for (const auto& c : report.cells) {
    if (!seen.insert({c.method, c.ood_dataset}).second)
      throw ValidationError("duplicate report cell for method '" + c.method + "' on dataset '" + c.ood_dataset + "'");
    dataset_group.emplace(c.ood_dataset, c.group);
  }
  std::vector<std::pair<std::string, std::string>> ordered;
  for (const auto& [name, group] : dataset_group) ordered.emplace_back(group, name);
  std::sort(ordered.begin(), ordered.end());
  std::set<std::string> groups;
  for (const auto& [group, name] : ordered) {
    report.datasets.push_back(name);
    if (!group.empty()) groups.insert(group);
  }
  report.groups.assign(groups.begin(), groups.end());

  for (std::size_t idx = 0; idx < report.cells.size(); ++idx) {
    const auto& c = report.cells[idx];
    if (report.rows.empty() || report.rows.back().method != c.method) {
      ReportRow row;
      row.method = c.method;
      row.family = c.family;
      row.hyperparameter = c.hyperparameter;
      report.rows.push_back(std::move(row));
    }
    report.rows.back().cells[c.ood_dataset] = idx;
  }
  for (auto& row : report.rows) {
    double fpr = 0.0, auc = 0.0;
    std::map<std::string, std::tuple<double, double, std::size_t>> per_group;
    for (const auto& [name, idx] : row.cells) {
      const auto* cell = &report.cells[idx];
      fpr += cell->fpr95;
      auc += cell->auroc;
      if (!cell->group.empty()) {
        auto& g = per_group[cell->group];
        std::get<0>(g) += cell->fpr95;
        std::get<1>(g) += cell->auroc;
        ++std::get<2>(g);
      }
    }
    const auto n = static_cast<double>(row.cells.size());
    row.mean_fpr95 = fpr / n;
    row.mean_auroc = auc / n;
    for (const auto& [g, acc] : per_group) {
      const auto k = static_cast<double>(std::get<2>(acc));
      row.group_means[g] = {std::get<0>(acc) / k, std::get<1>(acc) / k};
    }
  }
  return report;
}

std::vector<const ReportRow*> best_per_family(const EvalReport& report) {
  std::map<std::string, std::vector<const ReportRow*>> families;
  for (const auto& r : report.rows) families[r.family].push_back(&r);
  std::vector<const ReportRow*> best;
  for (const auto& r : report.rows) {
    const auto& members = families[r.family];
    if (members.size() < 2 || members.front() != &r) continue;
    const ReportRow* b = members.front();
    for (const auto* m : members) {
      const auto better = std::make_tuple(m->mean_fpr95, -m->mean_auroc, m->hyperparameter.value_or(0.0)) <
                          std::make_tuple(b->mean_fpr95, -b->mean_auroc, b->hyperparameter.value_or(0.0));
      if (better) b = m;
    }
    best.push_back(b);
  }
  return best;
}

void write_cells_tsv(std::ostream& out, const EvalReport& report) {
  out << "method\tfamily\thyperparameter\tood_dataset\tgroup\tfpr95\tauroc\tlambda\tn_id\tn_ood\tlow_n\n";
  for (const auto& c : report.cells) {
    out << c.method << '\t' << c.family << '\t' << (c.hyperparameter ? num17(*c.hyperparameter) : "") << '\t'
        << c.ood_dataset << '\t' << c.group << '\t' << num17(c.fpr95) << '\t' << num17(c.auroc) << '\t'
        << num17(c.lambda) << '\t' << c.n_id << '\t' << c.n_ood << '\t' << (c.low_n ? 1 : 0) << '\n';
  }
}

std::vector<EvalCell> read_cells_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("cells table is empty");
  const auto header = split_tabs(line);
  if (header.size() != 11 || header[0] != "method") throw ValidationError("cells table has an unexpected header");
  std::vector<EvalCell> cells;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 11) throw ValidationError("cells table line " + std::to_string(lineno) + " has " +
                                              std::to_string(f.size()) + " fields");
    try {
      EvalCell c;
      c.method = f[0];
      c.family = f[1];
      if (!f[2].empty()) c.hyperparameter = std::stod(f[2]);
      c.ood_dataset = f[3];
      c.group = f[4];
      c.fpr95 = std::stod(f[5]);
      c.auroc = std::stod(f[6]);
      c.lambda = std::stod(f[7]);
      c.n_id = std::stoull(f[8]);
      c.n_ood = std::stoull(f[9]);
      c.low_n = f[10] == "1";
      cells.push_back(std::move(c));
    } catch (const std::logic_error&) {
      throw ValidationError("cells table line " + std::to_string(lineno) + " has a malformed number");
    }
  }
  return cells;
}

void write_text_table(std::ostream& out, const EvalReport& report) {
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"method"};
  for (const auto& d : report.datasets) header.push_back(d);
  header.push_back("average");
  table.push_back(header);
  bool any_low = false;
  for (const auto& row : report.rows) {
    std::vector<std::string> line{row.method};
    for (const auto& d : report.datasets) {
      const auto it = row.cells.find(d);
      if (it == row.cells.end()) {
        line.push_back("-");
        continue;
      }
      const auto& c = report.cells[it->second];
      std::string cell = pct(c.fpr95) + " / " + pct(c.auroc);
      if (c.low_n) {
        cell += "*";
        any_low = true;
      }
      line.push_back(cell);
    }
    line.push_back(pct(row.mean_fpr95) + " / " + pct(row.mean_auroc));
    table.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());

  out << "FPR95 / AUROC (%)\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t i = 0; i < table[r].size(); ++i) {
      const auto& s = table[r][i];
      if (i == 0) {
        out << s << std::string(width[i] - s.size(), ' ');
      } else {
        out << "  " << std::string(width[i] - s.size(), ' ') << s;
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  if (any_low) out << "* fewer than " << kLowSampleCount << " ID or OOD samples\n";
}

void write_sweep_summary(std::ostream& out, const EvalReport& report) {
  out << "family\tbest_method\thyperparameter\tmean_fpr95\tmean_auroc\tvariants\n";
  for (const auto* best : best_per_family(report)) {
    std::size_t variants = 0;
    for (const auto& r : report.rows) variants += r.family == best->family;
    out << best->family << '\t' << best->method << '\t'
        << (best->hyperparameter ? num17(*best->hyperparameter) : "") << '\t' << num17(best->mean_fpr95) << '\t'
        << num17(best->mean_auroc) << '\t' << variants << '\n';
  }
}

void write_svg_chart(std::ostream& out, const EvalReport& report, const std::string& title) {
  // swept families are collapsed to their best member, as in a summary figure
  std::vector<const ReportRow*> rows;
  const auto best = best_per_family(report);
  for (const auto& r : report.rows) {
    const auto it = std::find_if(best.begin(), best.end(), [&](const ReportRow* b) { return b->family == r.family; });
    if (it == best.end() || *it == &r) rows.push_back(&r);
  }
  std::vector<std::string> panels = report.groups;
  if (panels.empty()) panels.push_back("");

  const int bar = 12, gap = 10, left = 50, top = 50, plot_h = 200, panel_gap = 60;
  const int group_w = 2 * bar + gap;
  const int panel_w = static_cast<int>(rows.size()) * group_w + gap;
  const int width = left + static_cast<int>(panels.size()) * (panel_w + panel_gap);
  const int height = top + plot_h + 130;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"28\" width=\"10\" height=\"10\" fill=\"#4477aa\"/><text x=\"" << left + 14
      << "\" y=\"37\">AUROC</text>\n";
  out << "<rect x=\"" << left + 70 << "\" y=\"28\" width=\"10\" height=\"10\" fill=\"#ee6677\"/><text x=\"" << left + 84
      << "\" y=\"37\">FPR95</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const int x0 = left + static_cast<int>(p) * (panel_w + panel_gap);
    const int base = top + plot_h;
    out << "<g>\n";
    out << "<text x=\"" << x0 << "\" y=\"" << top - 4 << "\">" << xml_escape(panels[p].empty() ? "all OOD sets" : panels[p])
        << "</text>\n";
    for (int t = 0; t <= 100; t += 25) {
      const int y = base - plot_h * t / 100;
      out << "<line x1=\"" << x0 << "\" y1=\"" << y << "\" x2=\"" << x0 + panel_w << "\" y2=\"" << y
          << "\" stroke=\"#dddddd\"/><text x=\"" << x0 - 4 << "\" y=\"" << y + 3 << "\" text-anchor=\"end\">" << t
          << "</text>\n";
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto* r = rows[i];
      double fpr = r->mean_fpr95, auc = r->mean_auroc;
      if (!panels[p].empty()) {
        const auto it = r->group_means.find(panels[p]);
        if (it == r->group_means.end()) continue;
        fpr = it->second.first;
        auc = it->second.second;
      }
      const int x = x0 + gap + static_cast<int>(i) * group_w;
      const int ha = static_cast<int>(plot_h * auc + 0.5), hf = static_cast<int>(plot_h * fpr + 0.5);
      out << "<rect x=\"" << x << "\" y=\"" << base - ha << "\" width=\"" << bar << "\" height=\"" << ha
          << "\" fill=\"#4477aa\"><title>" << xml_escape(r->method) << " AUROC " << pct(auc) << "</title></rect>\n";
      out << "<rect x=\"" << x + bar << "\" y=\"" << base - hf << "\" width=\"" << bar << "\" height=\"" << hf
          << "\" fill=\"#ee6677\"><title>" << xml_escape(r->method) << " FPR95 " << pct(fpr) << "</title></rect>\n";
      out << "<text transform=\"translate(" << x + bar << "," << base + 8 << ") rotate(60)\">" << xml_escape(r->method)
          << "</text>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace ood
