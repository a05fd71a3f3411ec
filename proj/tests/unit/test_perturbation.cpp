#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "myopic/perturbation.hpp"

using namespace myopic;
using namespace myopic::rsp;

namespace {

RawTable sample_table(std::size_t n, std::uint64_t seed) {
  Matrix m(n, 4);
  for (std::size_t r = 0; r < n; ++r) {
    m(r, 0) = 1.0 + std::floor(unit_draw(seed, r * 4) * 100.0);    // pktRx
    m(r, 1) = 60.0 / m(r, 0);                                      // pktRxAiat
    m(r, 2) = -120.0 + unit_draw(seed, r * 4 + 2) * 60.0;          // RSRP
    m(r, 3) = std::floor(unit_draw(seed, r * 4 + 3) * 16.0);       // CQI
  }
  return RawTable::from_matrix({"pktRx", "pktRxAiat", "RSRP", "CQI"}, m);
}

}  // namespace

TEST(Schedule, Multipliers) {
  const auto s = intensity_schedule(kDefaultMultipliers, 2.0);
  const std::vector<double> want{0.2, 0.4, 1.0, 2.0, 4.0, 10.0, 20.0};
  ASSERT_EQ(s.size(), want.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(s[i], want[i]);
  for (double v : intensity_schedule(kDefaultMultipliers, 0.0)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(intensity_schedule(std::vector<double>{1.0, 0.5}, 1.0), std::invalid_argument);
  EXPECT_THROW(intensity_schedule(kDefaultMultipliers, -1.0), std::invalid_argument);
}

TEST(Schedule, ComputedStd) {
  const std::vector<double> samples{1, 2, 3};
  const double sd = std::sqrt(((1 - 2.0) * (1 - 2.0) + (3 - 2.0) * (3 - 2.0)) / 3.0);
  const auto s = intensity_schedule(kDefaultMultipliers, population_std(samples));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(s[i], kDefaultMultipliers[i] * sd);
}

TEST(Apply, ZeroIntensityIsBitIdentical) {
  const auto t = sample_table(200, 1);
  PerturbationSpec spec;
  spec.target_fields = {"pktRx", "RSRP"};
  spec.intensity_levels = {0.0, 1.0};
  spec.derived.edges = {{"pktRx", "pktRxAiat", Recompute::inverse_proportional}};
  const auto r = apply_rsp(t, spec, 0, 5);
  EXPECT_EQ(r.records.values, t.values);
  EXPECT_EQ(r.records.ids, t.ids);
}

TEST(Apply, SpoofFixedTouchesOnlyTarget) {
  const auto t = sample_table(100, 2);
  PerturbationSpec spec;
  spec.target_fields = {"CQI"};
  spec.mode = Mode::spoof_fixed;
  spec.intensity_levels = {0.0};
  const auto r = apply_rsp(t, spec, 0, 5);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(r.records.values(i, 3), 0.0);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(r.records.values(i, c), t.values(i, c));
  }
}

TEST(Apply, DerivedFieldRecomputed) {
  const auto t = sample_table(100, 3);
  PerturbationSpec spec;
  spec.target_fields = {"pktRx"};
  spec.intensity_levels = {1.0};
  spec.std_reference = {{"pktRx", 10.0}};
  spec.derived.edges = {{"pktRx", "pktRxAiat", Recompute::inverse_proportional}};
  const auto r = apply_rsp(t, spec, 0, 5);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(r.records.values(i, 0), t.values(i, 0) + 10.0);
    EXPECT_NEAR(r.records.values(i, 1), 60.0 / r.records.values(i, 0), 1e-12);
    EXPECT_EQ(r.records.values(i, 2), t.values(i, 2));
  }
  EXPECT_EQ(spec.affected_fields(), (std::vector<std::string>{"pktRx", "pktRxAiat"}));
}

TEST(Integrity, ClampAndReject) {
  const std::vector<std::string> cols{"payload_len", "duration"};
  std::vector<ConstraintRule> rules{{"payload_len", Interval{0, 1500}, ViolationAction::clamp},
                                    {"duration", Interval{0, 1e9}, ViolationAction::reject}};
  std::vector<double> ok{1450, 1};
  EXPECT_EQ(verify_integrity(ok, cols, rules).kind, Verdict::Kind::ok);
  std::vector<double> big{1530, 1};
  EXPECT_EQ(verify_integrity(big, cols, rules).kind, Verdict::Kind::clamped);
  EXPECT_EQ(big[0], 1500);
  std::vector<double> neg{1530, -1};
  const auto v = verify_integrity(neg, cols, rules);
  EXPECT_EQ(v.kind, Verdict::Kind::rejected);
  EXPECT_EQ(v.fields, std::vector<std::string>{"duration"});
}

TEST(Integrity, CategoricalSnap) {
  std::vector<ConstraintRule> rules{{"PDB", std::vector<double>{5, 10, 50}, ViolationAction::clamp}};
  std::vector<double> v{12};
  EXPECT_EQ(verify_integrity(v, {"PDB"}, rules).kind, Verdict::Kind::clamped);
  EXPECT_EQ(v[0], 10);
}

TEST(Apply, RejectedRowsRemovedIdsKept) {
  const auto t = sample_table(300, 4);
  PerturbationSpec spec;
  spec.target_fields = {"RSRP"};
  spec.intensity_levels = {1.0};
  spec.std_reference = {{"RSRP", 20.0}};
  spec.constraints = {{"RSRP", Interval{-140, -75}, ViolationAction::reject}};
  const auto r = apply_rsp(t, spec, 0, 5);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < t.size(); ++i) expected += t.values(i, 2) + 20.0 <= -75.0;
  EXPECT_EQ(r.records.size(), expected);
  EXPECT_EQ(r.log.rejected_count(), t.size() - expected);
  for (std::size_t i = 0; i < r.records.size(); ++i)
    EXPECT_EQ(r.records.values(i, 2), t.values(r.records.ids[i], 2) + 20.0);
}

TEST(Apply, SerialEqualsParallel) {
  const auto t = sample_table(2000, 6);
  PerturbationSpec spec;
  spec.target_fields = {"pktRx"};
  spec.mode = Mode::pad_payload;
  spec.intensity_levels = {10, 50};
  spec.fraction = 0.4;
  spec.derived.edges = {{"pktRx", "pktRxAiat", Recompute::inverse_proportional}};
  const auto a = apply_rsp(t, spec, 1, 8, Exec::serial);
  const auto b = apply_rsp(t, spec, 1, 8, Exec::parallel);
  EXPECT_EQ(a.records.values, b.records.values);
  EXPECT_EQ(a.records.ids, b.records.ids);
  EXPECT_EQ(a.log.to_delimited(), b.log.to_delimited());
}

TEST(Apply, FractionSelectsSubset) {
  const auto t = sample_table(2000, 7);
  PerturbationSpec spec;
  spec.target_fields = {"CQI"};
  spec.mode = Mode::spoof_fixed;
  spec.intensity_levels = {99};
  spec.fraction = 0.25;
  const auto r = apply_rsp(t, spec, 0, 3);
  EXPECT_NEAR(static_cast<double>(r.log.entries.size()) / 2000.0, 0.25, 0.04);
}

TEST(Replace, SingleDonorValue) {
  const auto t = sample_table(50, 8);
  const auto r = replace_random(t, "RSRP", DonorPool{{-99.0}, {}}, 50, 1);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r.values(i, 2), -99.0);
}

TEST(Replace, CountZeroIsIdentity) {
  const auto t = sample_table(50, 9);
  EXPECT_EQ(replace_random(t, "RSRP", DonorPool{{-99.0}, {}}, 0, 1).values, t.values);
}

TEST(Replace, CountIsExact) {
  const auto t = sample_table(100, 9);
  const auto r = replace_random(t, "RSRP", DonorPool{{1.0}, {}}, 17, 4);
  int changed = 0;
  for (std::size_t i = 0; i < r.size(); ++i) changed += r.values(i, 2) == 1.0;
  EXPECT_EQ(changed, 17);
}

TEST(Replace, LinkedColumnFollowsDonor) {
  Matrix m(30, 3);
  for (std::size_t r = 0; r < 30; ++r) {
    m(r, 0) = -100.0 - static_cast<double>(r);  // RSRP
    m(r, 1) = -10.0 - static_cast<double>(r);   // RSRQ
    m(r, 2) = static_cast<double>(r);           // other
  }
  const auto t = RawTable::from_matrix({"RSRP", "RSRQ", "other"}, m);
  PerturbationSpec spec;
  spec.target_fields = {"RSRP"};
  spec.mode = Mode::replace_random;
  spec.intensity_levels = {0.0};
  spec.donors = DonorPool{{-80.0, -90.0}, {{"RSRQ", {-3.0, -6.0}}}};
  spec.derived.edges = {{"RSRP", "RSRQ", Recompute::copy_from_donor}};
  const auto r = apply_rsp(t, spec, 0, 11);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const double rsrp = r.records.values(i, 0);
    EXPECT_TRUE(rsrp == -80.0 || rsrp == -90.0);
    EXPECT_EQ(r.records.values(i, 1), rsrp == -80.0 ? -3.0 : -6.0);
    EXPECT_EQ(r.records.values(i, 2), t.values(i, 2));
  }
}

TEST(Graph, CycleAndDoubleRuleRejected) {
  DependencyGraph cyc{{{"a", "b", Recompute::inverse_proportional}, {"b", "a", Recompute::inverse_proportional}}};
  EXPECT_THROW(cyc.validate(), std::invalid_argument);
  DependencyGraph dbl{{{"a", "c", Recompute::inverse_proportional}, {"b", "c", Recompute::inverse_proportional}}};
  EXPECT_THROW(dbl.validate(), std::invalid_argument);
  DependencyGraph chain{{{"b", "c", Recompute::inverse_proportional}, {"a", "b", Recompute::inverse_proportional}}};
  const auto order = chain.topological_edges();
  EXPECT_EQ(order.front().source, "a");
  EXPECT_EQ(chain.closure({"a"}), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Spec, ValidationErrors) {
  PerturbationSpec spec;
  EXPECT_THROW(spec.validate({"a"}), std::invalid_argument);
  spec.target_fields = {"zz"};
  spec.intensity_levels = {1};
  EXPECT_THROW(spec.validate({"a"}), std::invalid_argument);
  spec.target_fields = {"a"};
  spec.mode = Mode::replace_random;
  EXPECT_THROW(spec.validate({"a"}), std::invalid_argument);
}
