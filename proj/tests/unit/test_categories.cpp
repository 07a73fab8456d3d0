#include <gtest/gtest.h>

#include <sstream>

#include "ood/categories.hpp"

using namespace ood;

TEST(Categories, ExactMatchIsRemovedAndLogged) {
  const auto r = filter_overlap({"pizza", "sushi"}, {"Pizza"});
  EXPECT_EQ(r.kept, (std::vector<std::string>{"sushi"}));
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].ood_category, "pizza");
  EXPECT_EQ(r.removed[0].matched, "Pizza");
  EXPECT_EQ(r.removed[0].reason, "exact");
}

TEST(Categories, DisjointListsAreUnchanged) {
  const std::vector<std::string> ood{"tiger", "airplane", "Sea Lion"};
  const auto r = filter_overlap(ood, {"ramen", "pho"});
  EXPECT_EQ(r.kept, ood);
  EXPECT_TRUE(r.removed.empty());
}

TEST(Categories, UnderscoresAndCaseNormalize) {
  const auto r = filter_overlap({"filet_mignon"}, {"Filet Mignon"});
  EXPECT_TRUE(r.kept.empty());
  EXPECT_EQ(normalize_category("  Hot__Dog \t"), "hot dog");
  EXPECT_EQ(normalize_category("a  b"), "a b");
  EXPECT_EQ(normalize_category(""), "");
}

TEST(Categories, PartialMatchesAreKept) {
  const auto r = filter_overlap({"pizza oven", "apple pie"}, {"pizza", "apple"});
  EXPECT_EQ(r.kept.size(), 2u);
}

TEST(Categories, ExternalListMergesIntoTheLog) {
  const auto r = filter_overlap({"pizza", "flatbread", "rocks"}, {"pizza"}, {"Flatbread"});
  EXPECT_EQ(r.kept, (std::vector<std::string>{"rocks"}));
  ASSERT_EQ(r.removed.size(), 2u);
  EXPECT_EQ(r.removed[1].reason, "external");
  std::ostringstream out;
  write_removal_log(out, r);
  EXPECT_EQ(out.str(), "ood_category\tmatched\treason\npizza\tpizza\texact\nflatbread\tFlatbread\texternal\n");
}
