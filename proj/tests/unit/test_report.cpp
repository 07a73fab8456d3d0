#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "generators.hpp"
#include "ood/error.hpp"
#include "ood/report.hpp"

using namespace ood;

namespace {

EvalCell cell(std::string method, std::string family, std::optional<double> h, std::string dataset, double fpr,
              double auc, std::string group = "") {
  EvalCell c;
  c.method = std::move(method);
  c.family = std::move(family);
  c.hyperparameter = h;
  c.ood_dataset = std::move(dataset);
  c.group = std::move(group);
  c.fpr95 = fpr;
  c.auroc = auc;
  c.n_id = 100;
  c.n_ood = 100;
  return c;
}

}  // namespace

TEST(Report, SingleCellAverage) {
  const auto r = build_report({cell("msp", "msp", std::nullopt, "a", 0.3, 0.8)});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].mean_fpr95, 0.3);
  EXPECT_EQ(r.rows[0].mean_auroc, 0.8);
}

TEST(Report, TwoCellAverage) {
  const auto r = build_report({cell("msp", "msp", std::nullopt, "a", 0.2, 0.9),
                               cell("msp", "msp", std::nullopt, "b", 0.4, 0.7)});
  EXPECT_NEAR(r.rows[0].mean_fpr95, 0.3, 1e-15);
  EXPECT_NEAR(r.rows[0].mean_auroc, 0.8, 1e-15);
}

TEST(Report, GridAveragesMatchBruteForce) {
  ood::testing::Rng rng(5);
  std::vector<EvalCell> cells;
  std::map<std::string, std::pair<double, double>> sums;
  const char* methods[] = {"msp", "odin", "openmax", "kl_matching", "mahalanobis",
                           "maxlogit", "energy", "vim", "react", "dice"};
  for (const char* m : methods)
    for (int d = 0; d < 5; ++d) {
      const double f = rng.uniform(), a = rng.uniform();
      cells.push_back(cell(m, m, std::nullopt, "set" + std::to_string(d), f, a, d < 2 ? "food" : "non-food"));
      sums[m].first += f;
      sums[m].second += a;
    }
  const auto r = build_report(cells);
  EXPECT_EQ(r.rows.size(), 10u);
  EXPECT_EQ(r.datasets.size(), 5u);
  EXPECT_EQ(r.groups, (std::vector<std::string>{"food", "non-food"}));
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.mean_fpr95, sums[row.method].first / 5, 1e-12);
    EXPECT_NEAR(row.mean_auroc, sums[row.method].second / 5, 1e-12);
  }
  EXPECT_EQ(r.rows.front().method, "msp");
  EXPECT_EQ(r.rows.back().method, "dice");
}

TEST(Report, DuplicateCellIsAnError) {
  EXPECT_THROW(build_report({cell("msp", "msp", std::nullopt, "a", 0.1, 0.9),
                             cell("msp", "msp", std::nullopt, "a", 0.2, 0.9)}),
               ValidationError);
}

TEST(Report, SweepPicksLowestFprThenAurocThenSmallerValue) {
  const auto r = build_report({
      cell("react(tau=1)", "react", 1.0, "a", 0.30, 0.90),
      cell("react(tau=2)", "react", 2.0, "a", 0.20, 0.80),
      cell("react(tau=3)", "react", 3.0, "a", 0.20, 0.85),
      cell("dice(rho=0.5)", "dice", 0.5, "a", 0.10, 0.70),
      cell("dice(rho=0.1)", "dice", 0.1, "a", 0.10, 0.70),
      cell("msp", "msp", std::nullopt, "a", 0.5, 0.5),
  });
  const auto best = best_per_family(r);
  ASSERT_EQ(best.size(), 2u);
  EXPECT_EQ(best[0]->method, "react(tau=3)");
  EXPECT_EQ(best[1]->method, "dice(rho=0.1)");
  std::ostringstream out;
  write_sweep_summary(out, r);
  EXPECT_NE(out.str().find("react\treact(tau=3)\t3\t"), std::string::npos);
}

TEST(Report, CellsTableRoundTrip) {
  auto low = cell("vim", "vim", std::nullopt, "tiny", 1.0 / 3, 0.123456789012345678, "g");
  low.low_n = true;
  low.lambda = -0.25;
  low.n_ood = 1;
  const auto r = build_report({low, cell("react(tau=1.75)", "react", 1.75, "tiny", 0.0, 1.0, "g")});
  std::stringstream ss;
  write_cells_tsv(ss, r);
  const auto back = read_cells_tsv(ss);
  ASSERT_EQ(back.size(), 2u);
  const auto again = build_report(back);
  std::stringstream ss2;
  write_cells_tsv(ss2, again);
  EXPECT_EQ(ss.str(), ss2.str());
  // vim sorts ahead of react
  EXPECT_EQ(back[0].fpr95, 1.0 / 3);
  EXPECT_TRUE(back[0].low_n);
  EXPECT_EQ(back[0].lambda, -0.25);
  EXPECT_EQ(back[1].hyperparameter, 1.75);
  EXPECT_FALSE(back[1].low_n);
}

TEST(Report, MalformedCellsTable) {
  std::istringstream empty("");
  EXPECT_THROW(read_cells_tsv(empty), ValidationError);
  std::istringstream bad("method\tfamily\thyperparameter\tood_dataset\tgroup\tfpr95\tauroc\tlambda\tn_id\tn_ood\tlow_n\n"
                         "msp\tmsp\t\ta\t\tzero\t0.5\t0\t1\t1\t0\n");
  EXPECT_THROW(read_cells_tsv(bad), ValidationError);
}

TEST(Report, TextTableUsesOneDecimalPercent) {
  auto low = cell("msp", "msp", std::nullopt, "a", 0.1234, 0.98765);
  low.low_n = true;
  const auto r = build_report({low});
  std::ostringstream out;
  write_text_table(out, r);
  EXPECT_NE(out.str().find("12.3 / 98.8*"), std::string::npos);
  EXPECT_NE(out.str().find("fewer than 20"), std::string::npos);
}

TEST(Report, SvgChartHasOneBarPairPerShownMethod) {
  const auto r = build_report({
      cell("msp", "msp", std::nullopt, "a", 0.5, 0.5, "food"),
      cell("react(tau=1)", "react", 1.0, "a", 0.3, 0.9, "food"),
      cell("react(tau=2)", "react", 2.0, "a", 0.2, 0.9, "food"),
      cell("vim", "vim", std::nullopt, "b", 0.1, 0.99, "non-food"),
  });
  std::ostringstream out;
  write_svg_chart(out, r, "A & B");
  const auto svg = out.str();
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("A &amp; B"), std::string::npos);
  EXPECT_NE(svg.find("react(tau=2) AUROC"), std::string::npos);
  EXPECT_EQ(svg.find("react(tau=1) AUROC"), std::string::npos);
  EXPECT_NE(svg.find(">food<"), std::string::npos);
  EXPECT_NE(svg.find(">non-food<"), std::string::npos);
}
