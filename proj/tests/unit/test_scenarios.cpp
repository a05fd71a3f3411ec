#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "myopic/scenarios.hpp"

using namespace myopic;
using namespace myopic::scenarios;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("myopic_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}

template <typename T>
T round_trip(int scenario, const ScenarioData& data, IngestLog& log) {
  const auto path = write_temp("cs" + std::to_string(scenario) + ".csv", export_dataset(data));
  return std::get<T>(ingest_real_dataset(scenario, path, log));
}

}  // namespace

TEST(Schemas, BuiltInScopesAreValid) {
  for (int s = 1; s <= 6; ++s)
    for (const auto& [name, scope] : scenario_scopes(s)) EXPECT_TRUE(threat::validate_scope(scope).empty()) << name;
  EXPECT_EQ(kCqiFeatures.size(), 16u);
  EXPECT_EQ(iq_schema().size(), 256u);
  EXPECT_EQ(flow::kFeatureNames.size(), 13u);
  EXPECT_THROW(scenario_scopes(7), std::invalid_argument);
}

TEST(Schemas, CqiRsrpScopeTouchesTwoFields) {
  const auto scopes = scenario_scopes(2);
  const auto& rsrp = scopes.front().second;
  EXPECT_EQ(rsrp.affected, (std::vector<std::string>{"RSRP", "RSRQ"}));
  EXPECT_EQ(rsrp.full.size() - rsrp.affected.size(), 14u);
}

TEST(Generators, SliceLabelsIgnoreDayAndHour) {
  const auto d = generate_slices(600, 3);
  const auto& t = d.table;
  const auto uc = t.index_of("UseCase"), gbr = t.index_of("GuaranteedBitRate"), plr = t.index_of("PacketLossRate"),
             pdb = t.index_of("PacketDelayBudget");
  std::vector<int> counts(3, 0);
  for (std::size_t r = 0; r < t.size(); ++r) {
    EXPECT_EQ(slice_rule(t.values(r, uc), t.values(r, gbr), t.values(r, plr), t.values(r, pdb)), d.labels[r]);
    ++counts[static_cast<std::size_t>(d.labels[r])];
  }
  for (int c : counts) EXPECT_EQ(c, 200);
}

TEST(Generators, TrafficAttackerShare) {
  TrafficParams p;
  p.sessions_per_host = 6;
  const auto cap = generate_traffic(p, 4);
  EXPECT_EQ(cap.attackers.size(), 6u);
  const std::set<std::string> att(cap.attackers.begin(), cap.attackers.end());
  const auto flows = flow::aggregate_flows(cap.packets);
  std::size_t owned = 0;
  for (const auto& f : flows) owned += att.count(f.key.src_ip);
  const double share = static_cast<double>(owned) / static_cast<double>(flows.size());
  EXPECT_GT(share, 0.03);
  EXPECT_LT(share, 0.08);
}

TEST(Generators, IqClassBalanced) {
  const auto d = generate_iq(20, 10.0, 5);
  std::vector<int> counts(kModulations.size(), 0);
  for (int l : d.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) EXPECT_EQ(c, 20);
  for (double s : d.snr) EXPECT_EQ(s, 10.0);
  EXPECT_EQ(d.x.cols(), 256u);
}

TEST(Generators, CqiSeriesInDomain) {
  for (auto m : {Mobility::stationary, Mobility::driving}) {
    const auto s = generate_cqi_series(m, 500, 6);
    ASSERT_EQ(s.cqi.size(), 500u);
    for (double c : s.cqi) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 15.0);
      EXPECT_EQ(c, std::round(c));
    }
  }
}

TEST(Generators, SizeBounds) {
  EXPECT_THROW(generate_scenario_data(2, 5, 1), std::invalid_argument);
  EXPECT_THROW(generate_scenario_data(9, 0, 1), std::invalid_argument);
}

TEST(Ingest, RoundTripEveryScenario) {
  IngestLog log;
  {
    const auto d = std::get<CqiDataset>(generate_scenario_data(2, 200, 1));
    const auto back = round_trip<CqiDataset>(2, d, log);
    EXPECT_EQ(back.table.values, d.table.values);
    EXPECT_EQ(back.cqi, d.cqi);
  }
  {
    const auto d = std::get<std::vector<CqiSeries>>(generate_scenario_data(3, 100, 1));
    const auto back = round_trip<std::vector<CqiSeries>>(3, d, log);
    ASSERT_EQ(back.size(), 2u);
    for (const auto& s : d) {
      auto it = std::find_if(back.begin(), back.end(), [&](const CqiSeries& b) { return b.name == s.name; });
      ASSERT_NE(it, back.end());
      EXPECT_EQ(it->cqi, s.cqi);
      EXPECT_EQ(it->mobility, s.mobility);
    }
  }
  {
    const auto d = std::get<IqDataset>(generate_scenario_data(4, 3, 1));
    const auto back = round_trip<IqDataset>(4, d, log);
    EXPECT_EQ(back.x, d.x);
    EXPECT_EQ(back.labels, d.labels);
  }
  {
    const auto d = std::get<PowerDataset>(generate_scenario_data(5, 12, 0));
    const auto back = round_trip<PowerDataset>(5, d, log);
    EXPECT_EQ(back.positions, d.positions);
    for (std::size_t i = 0; i < d.x.data().size(); ++i) {
      EXPECT_NEAR(back.x.data()[i], d.x.data()[i], 1e-12);
      EXPECT_NEAR(back.shares.data()[i], d.shares.data()[i], 1e-12);
    }
  }
  {
    const auto d = std::get<SliceDataset>(generate_scenario_data(6, 60, 1));
    const auto back = round_trip<SliceDataset>(6, d, log);
    EXPECT_EQ(back.table.values, d.table.values);
    EXPECT_EQ(back.labels, d.labels);
  }
  {
    const auto d = std::get<TrafficCapture>(generate_scenario_data(1, 1, 1));
    const auto back = round_trip<TrafficCapture>(1, d, log);
    EXPECT_EQ(back.packets, d.packets);
    std::set<std::string> a(d.attackers.begin(), d.attackers.end()), b(back.attackers.begin(), back.attackers.end());
    EXPECT_EQ(a, b);
    auto flows = flow::aggregate_flows(d.packets);
    for (const auto& f : flows) EXPECT_EQ(back.label_rule()(f), d.label_rule()(f));
  }
  EXPECT_EQ(log.skipped, 0u);
}

TEST(Ingest, MalformedRowsSkippedAndLogged) {
  auto text = export_dataset(generate_scenario_data(6, 30, 2));
  text += "1,2,3\n";                      // wrong field count
  text += "1,1,1,1,1,1,,1,eMBB\n";       // missing value
  text += "1,1,1,1,1,1,1,1,Unknown\n";   // unknown label
  IngestLog log;
  const auto d = std::get<SliceDataset>(ingest_real_dataset(6, write_temp("bad6.csv", text), log));
  EXPECT_EQ(d.labels.size(), 30u);
  EXPECT_EQ(log.skipped, 3u);
  EXPECT_EQ(log.messages.size(), 3u);
}

TEST(Ingest, MissingColumnsAreErrors) {
  IngestLog log;
  const auto p = write_temp("nocqi.csv", "RSRQ,RSRP\n1,2\n");
  try {
    ingest_real_dataset(2, p, log);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("pktRx"), std::string::npos);
  }
  std::string header;
  for (const auto& f : kCqiFeatures) header += f + ",";
  header.pop_back();
  EXPECT_THROW(ingest_real_dataset(2, write_temp("nolabel.csv", header + "\n"), log), std::invalid_argument);
  EXPECT_THROW(ingest_real_dataset(2, "/nonexistent/file.csv", log), std::invalid_argument);
}

TEST(Ingest, TraceWithoutCqiDropped) {
  std::string text = "trace,timestamp,CQI,mobility\n";
  for (int t = 0; t < 10; ++t) text += "good," + std::to_string(t) + ",7,stationary\n";
  for (int t = 0; t < 10; ++t) text += "bad," + std::to_string(t) + "," + (t == 4 ? "" : "7") + ",driving\n";
  IngestLog log;
  const auto d = std::get<std::vector<CqiSeries>>(ingest_real_dataset(3, write_temp("trace.csv", text), log));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].name, "good");
  EXPECT_EQ(log.skipped, 1u);
}

TEST(Iq, RandomPositionsDistinct) {
  const auto p = random_iq_positions(25, 3);
  EXPECT_EQ(std::set<std::string>(p.begin(), p.end()).size(), 25u);
  EXPECT_THROW(random_iq_positions(0, 3), std::invalid_argument);
}

TEST(CaseStudy, ValidationBeforeWork) {
  CaseConfig c;
  c.scenario = 6;
  c.scope = threat::FeatureScope{kSliceFeatures, {"Day"}, {"Day", "Hour"}, {"Day", "Hour"}};
  try {
    run_case_study(c, 1);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("conscious ⊄ known"), std::string::npos);
  }
  c.scope.reset();
  c.scenario = 0;
  EXPECT_THROW(run_case_study(c, 1), std::invalid_argument);
  c.scenario = 6;
  c.stages = {"bogus"};
  EXPECT_THROW(run_case_study(c, 1), std::invalid_argument);
}
