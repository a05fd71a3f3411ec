#include <gtest/gtest.h>

#include <cmath>

#include "myopic/common.hpp"
#include "myopic/threat_model.hpp"

using namespace myopic;
using namespace myopic::threat;

TEST(Scope, ValidExample) {
  FeatureScope s{{"a", "b", "c"}, {"a", "b"}, {"a"}, {"a", "c"}};
  EXPECT_TRUE(validate_scope(s).empty());
}

TEST(Scope, KnownOutsideFull) {
  FeatureScope s{{"a", "b"}, {"a", "c"}, {}, {}};
  const auto v = validate_scope(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].relation, "known ⊄ full");
  EXPECT_EQ(v[0].offending, std::vector<std::string>{"c"});
}

TEST(Scope, EveryRelationReported) {
  FeatureScope s{{"a"}, {"a", "k"}, {"z"}, {"q"}};
  const auto v = validate_scope(s);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[1].relation, "conscious ⊄ known");
  EXPECT_EQ(v[2].relation, "affected ⊄ full");
  EXPECT_EQ(v[3].relation, "conscious ⊄ affected");
}

TEST(Scope, TrafficPaddingScope) {
  const std::vector<std::string> full{"SrcIPType", "DstIPType", "SrcPortType", "DstPortType", "FlowDirection",
                                      "ConnState", "Dur",       "SrcToS",      "DstToS",      "SrcBytes",
                                      "DstBytes",  "TotBytes",  "TotPkts"};
  FeatureScope s{full,
                 {"SrcIPType", "DstIPType", "Dur", "SrcPortType", "DstPortType", "TotPkts", "TotBytes", "SrcBytes"},
                 {"TotPkts", "TotBytes"},
                 {"Dur", "SrcBytes", "DstBytes", "TotBytes", "TotPkts"}};
  EXPECT_TRUE(validate_scope(s).empty());
}

TEST(Success, Classification) {
  EXPECT_TRUE(attack_success(1, 0, 1, Task::classification));
  EXPECT_FALSE(attack_success(1, 1, 1, Task::classification));
  EXPECT_THROW(attack_success(1.0, 0, 1, Task::classification), std::invalid_argument);
}

TEST(Success, RegressionMargin) {
  EXPECT_TRUE(attack_success(10.1, 12.0, 10.0, Task::regression, 0.5));
  EXPECT_FALSE(attack_success(10.1, 10.5, 10.0, Task::regression, 0.5));
  EXPECT_FALSE(attack_success(10.1, 10.1, 10.0, Task::regression, 0.0));
  EXPECT_THROW(attack_success(1.0, 1.0, 1.0, Task::regression, -1.0), std::invalid_argument);
}

TEST(Tradeoff, IdentityForRandomP) {
  for (std::uint64_t i = 0; i < 100; ++i) {
    const double p = 0.01 + unit_draw(5, i);
    EXPECT_EQ(tradeoff(p, p).tradeoff, 1.0);
  }
  EXPECT_THROW(tradeoff(0.9, 0.0), std::invalid_argument);
}

TEST(Tradeoff, RoundedTableValues) {
  auto r2 = [](double v) { return std::round(v * 100.0) / 100.0; };
  EXPECT_DOUBLE_EQ(r2(tradeoff(0.95, 0.94).tradeoff), 1.01);
  EXPECT_DOUBLE_EQ(r2(tradeoff(1.00, 2.0 / 3.0).tradeoff), 1.50);
  EXPECT_DOUBLE_EQ(r2(tradeoff(1.00, 1.00).tradeoff), 1.00);
}

TEST(Degradation, Orientation) {
  EXPECT_DOUBLE_EQ(degradation(0.99, 0.99, Orientation::higher_better), 0.0);
  EXPECT_NEAR(degradation(0.82, 0.60, Orientation::higher_better), 0.22, 1e-12);
  EXPECT_NEAR(degradation(0.22, 0.40, Orientation::lower_better), 0.18, 1e-12);
  EXPECT_EQ(orientation_of(Metric::rmse), Orientation::lower_better);
  EXPECT_EQ(orientation_of(Metric::f1), Orientation::higher_better);
  EXPECT_EQ(metric_from_name(metric_name(Metric::crmse)), Metric::crmse);
}

// Brute-force references for the aggregate metrics.
TEST(Metrics, AgainstHandCounts) {
  const std::vector<int> t{1, 0, 1, 1, 0, 0, 1, 0};
  const std::vector<int> p{1, 0, 0, 1, 1, 0, 1, 0};
  // tp=3 fp=1 fn=1
  EXPECT_DOUBLE_EQ(accuracy(t, p), 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(f1_score(t, p, 1), 2.0 * 3 / (2.0 * 3 + 1 + 1));
  const std::vector<int> none{0, 0};
  EXPECT_DOUBLE_EQ(f1_score(none, none, 1), 0.0);
  const std::vector<double> y{1, 2, 3}, yh{1, 2, 5};
  EXPECT_DOUBLE_EQ(rmse(y, yh), std::sqrt(4.0 / 3.0));
  const std::vector<double> r{1.4, 2.6, 3.0};
  EXPECT_DOUBLE_EQ(rounded_accuracy(y, r), 2.0 / 3.0);
}
