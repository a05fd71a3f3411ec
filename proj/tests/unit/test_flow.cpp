#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "../support/flow_oracle.hpp"
#include "myopic/flow.hpp"

using namespace myopic;
using namespace myopic::flow;

namespace {

FeatureExtractor internal_fx() {
  FeatureExtractor fx;
  fx.internal_prefixes = {Ipv4Prefix::parse("10.0.0.0/8")};
  return fx;
}

std::vector<std::array<double, 13>> extracted(const std::vector<PacketRecord>& packets, ExporterConfig cfg = {}) {
  const auto fx = internal_fx();
  std::vector<std::array<double, 13>> out;
  for (const auto& f : aggregate_flows(packets, cfg)) out.push_back(fx.extract(f));
  return out;
}

}  // namespace

TEST(Packets, LineRoundTrip) {
  const auto pk = oracle::fuzz_packets(150, 11);
  std::stringstream ss;
  write_packets(ss, pk);
  EXPECT_EQ(read_packets(ss), pk);
}

TEST(Packets, ParseErrorsNameTheField) {
  try {
    parse_line("1.0,10.0.0.1,80,10.0.0.2,x,TCP,S,0,0");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("dst_port"), std::string::npos);
  }
  EXPECT_THROW(parse_line("1.0,10.0.0.1,80,10.0.0.2,81,UDP,S,0,0"), std::invalid_argument);
  EXPECT_THROW(parse_line("1.0,10.0.0.1,80,10.0.0.2,81,TCP,-,1501,0"), std::invalid_argument);
  EXPECT_THROW(parse_line("1.0,10.0.0.1,80"), std::invalid_argument);
}

TEST(Aggregate, SixPacketExample) {
  const auto flows = aggregate_flows(oracle::six_packet_flow());
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flows[0].tot_pkts(), 6);
  EXPECT_EQ(flows[0].src_bytes, 350);
  EXPECT_EQ(flows[0].dst_bytes, 0);
  EXPECT_EQ(flows[0].tot_bytes(), 350);
  const std::array<double, 13> hand{1, 0, 1, 0, 1, 1, 0.4, 0, 0, 350, 0, 350, 6};
  EXPECT_EQ(internal_fx().extract(flows[0]), hand);
}

TEST(Aggregate, IdleTimeoutSplits) {
  auto pk = oracle::six_packet_flow();
  auto later = oracle::six_packet_flow();
  for (auto& p : later) p.timestamp += 200.0;
  pk.insert(pk.end(), later.begin(), later.end());
  EXPECT_EQ(aggregate_flows(pk).size(), 2u);
  ExporterConfig long_idle{300.0, 3600.0};
  EXPECT_EQ(aggregate_flows(pk, long_idle).size(), 1u);
}

TEST(Aggregate, EmptyInput) { EXPECT_TRUE(aggregate_flows({}).empty()); }

TEST(Aggregate, MatchesBruteForceOracle) {
  EXPECT_EQ(extracted(oracle::six_packet_flow()), oracle::brute_force(oracle::six_packet_flow()));
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto pk = oracle::fuzz_packets(200, seed);
    ExporterConfig cfg{30.0, 120.0};
    const auto got = extracted(pk, cfg);
    const auto want = oracle::brute_force(pk, cfg.idle_timeout, cfg.active_timeout);
    ASSERT_EQ(got.size(), want.size()) << "seed " << seed;
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i]) << "seed " << seed << " flow " << i;
  }
}

TEST(Aggregate, ByteAndPacketConservation) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto pk = oracle::fuzz_packets(200, seed);
    std::int64_t bytes = 0, flow_bytes = 0, flow_pkts = 0;
    for (const auto& p : pk) bytes += p.payload_len;
    for (const auto& f : aggregate_flows(pk)) {
      flow_bytes += f.tot_bytes();
      flow_pkts += f.tot_pkts();
    }
    EXPECT_EQ(flow_bytes, bytes);
    EXPECT_EQ(flow_pkts, static_cast<std::int64_t>(pk.size()));
  }
}

TEST(Features, PortAndAddressTypes) {
  const auto fx = internal_fx();
  EXPECT_EQ(fx.port_category(80), 0);
  EXPECT_EQ(fx.port_category(8080), 1);
  EXPECT_EQ(fx.port_category(50000), 2);
  EXPECT_TRUE(fx.is_internal("10.1.2.3"));
  EXPECT_FALSE(fx.is_internal("11.1.2.3"));
  EXPECT_FALSE(fx.is_internal("not-an-ip"));
  EXPECT_NE(fx.fingerprint(), FeatureExtractor{}.fingerprint());
}

TEST(Padding, ZeroPadIsIdentity) {
  const auto pk = oracle::fuzz_packets(200, 3);
  EXPECT_EQ(pad_payloads(pk, {"10.0.0.1"}, 0, 1), pk);
}

TEST(Padding, OnlyAttackerDataPackets) {
  const auto pk = oracle::fuzz_packets(200, 4);
  const auto padded = pad_payloads(pk, {"10.0.0.1"}, 300, 9);
  for (std::size_t i = 0; i < pk.size(); ++i) {
    const bool eligible = pk[i].src_ip == "10.0.0.1" && !(pk[i].protocol == Protocol::tcp && pk[i].payload_len == 0);
    if (!eligible) {
      EXPECT_EQ(padded[i], pk[i]);
    } else {
      EXPECT_GE(padded[i].payload_len, pk[i].payload_len);
      EXPECT_LE(padded[i].payload_len, std::min(kMaxPayload, pk[i].payload_len + 300));
    }
  }
}

TEST(Padding, MonotoneInMaxPad) {
  const auto pk = oracle::fuzz_packets(200, 5);
  const auto a = pad_payloads(pk, {"10.0.0.2"}, 50, 2);
  const auto b = pad_payloads(pk, {"10.0.0.2"}, 200, 2);
  for (std::size_t i = 0; i < pk.size(); ++i) EXPECT_LE(a[i].payload_len, b[i].payload_len);
}

TEST(Padding, HandshakeUntouched) {
  auto pk = oracle::six_packet_flow();
  const auto padded = pad_payloads(pk, {"10.0.0.7"}, 100, 1);
  for (std::size_t i = 0; i < pk.size(); ++i)
    if (pk[i].payload_len == 0) EXPECT_EQ(padded[i].payload_len, 0);
  std::int64_t before = 0, after = 0;
  for (const auto& f : aggregate_flows(pk)) before += f.tot_bytes();
  for (const auto& f : aggregate_flows(padded)) after += f.tot_bytes();
  std::int64_t added = 0;
  for (std::size_t i = 0; i < pk.size(); ++i) added += padded[i].payload_len - pk[i].payload_len;
  EXPECT_EQ(after - before, added);
}

namespace {

std::vector<FlowRecord> owned_flows(int attacker, int others) {
  std::vector<FlowRecord> out;
  for (int i = 0; i < attacker + others; ++i) {
    FlowRecord f;
    f.key.src_ip = i < attacker ? "10.0.0.66" : "10.0.0.1";
    f.key.src_port = 1000 + i;
    f.start = i;
    f.src_bytes = 10;
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(Poison, RatioZeroIsIdentity) {
  const auto t = owned_flows(10, 190);
  const auto r = poison_training_set(t, {"10.0.0.66"}, 0.0, {}, 1);
  EXPECT_TRUE(r.replaced.empty());
  EXPECT_EQ(r.flows.size(), t.size());
}

TEST(Poison, RatioOneReplacesEveryAttackerFlow) {
  const auto t = owned_flows(10, 190);
  auto adv = t;
  for (auto& f : adv) f.src_bytes = 99;
  const auto r = poison_training_set(t, {"10.0.0.66"}, 1.0, adv, 1);
  EXPECT_EQ(r.replaced.size(), 10u);
  int changed = 0;
  for (std::size_t i = 0; i < t.size(); ++i) changed += r.flows[i].src_bytes != t[i].src_bytes;
  EXPECT_EQ(changed, 10);
  for (std::size_t i = 10; i < t.size(); ++i) EXPECT_EQ(r.flows[i].src_bytes, 10);
}

TEST(Poison, CeilCountAndErrors) {
  const auto t = owned_flows(10, 5);
  EXPECT_EQ(poison_training_set(t, {"10.0.0.66"}, 0.25, t, 3).replaced.size(), 3u);
  EXPECT_THROW(poison_training_set(t, {"10.0.0.66"}, 1.5, t, 3), std::invalid_argument);
  EXPECT_THROW(poison_training_set(t, {"10.0.0.66"}, 0.5, {}, 3), std::invalid_argument);
}
