// Brute-force flow aggregation used as a reference in tests. Linear scans
// only; every flow statistic is recomputed from its member packets.
#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <string>
#include <vector>

#include "myopic/common.hpp"
#include "myopic/flow.hpp"

namespace oracle {

using myopic::flow::PacketRecord;
using myopic::flow::Protocol;
namespace tcp = myopic::flow::tcp;

struct OracleFlow {
  std::vector<std::size_t> members;  // indices into the time-sorted packets
  bool open = true;
};

inline bool same_conversation(const PacketRecord& a, const PacketRecord& b) {
  if (a.protocol != b.protocol) return false;
  const bool fwd = a.src_ip == b.src_ip && a.src_port == b.src_port && a.dst_ip == b.dst_ip && a.dst_port == b.dst_port;
  const bool rev = a.src_ip == b.dst_ip && a.src_port == b.dst_port && a.dst_ip == b.src_ip && a.dst_port == b.src_port;
  return fwd || rev;
}

inline std::vector<PacketRecord> time_sorted(const std::vector<PacketRecord>& packets) {
  std::vector<std::size_t> idx(packets.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return packets[a].timestamp < packets[b].timestamp; });
  std::vector<PacketRecord> out;
  for (auto i : idx) out.push_back(packets[i]);
  return out;
}

inline bool from_first(const std::vector<PacketRecord>& p, const OracleFlow& f, std::size_t i) {
  const auto& first = p[f.members.front()];
  return p[i].src_ip == first.src_ip && p[i].src_port == first.src_port;
}

inline bool both_fin(const std::vector<PacketRecord>& p, const OracleFlow& f) {
  bool a = false, b = false;
  for (auto i : f.members)
    if (p[i].flags & tcp::fin) (from_first(p, f, i) ? a : b) = true;
  return a && b;
}

/// Flow membership per packet of the time-sorted sequence.
inline std::vector<OracleFlow> group(const std::vector<PacketRecord>& p, double idle, double active) {
  std::vector<OracleFlow> flows;
  for (std::size_t i = 0; i < p.size(); ++i) {
    OracleFlow* hit = nullptr;
    for (auto& f : flows)
      if (f.open && same_conversation(p[f.members.front()], p[i])) hit = &f;
    if (hit) {
      const double last = p[hit->members.back()].timestamp;
      const double first = p[hit->members.front()].timestamp;
      const bool pure_ack = p[i].protocol == Protocol::tcp && p[i].flags == tcp::ack && p[i].payload_len == 0;
      const bool closing = p[i].protocol == Protocol::tcp && both_fin(p, *hit);
      if (p[i].timestamp - last > idle || p[i].timestamp - first > active || (closing && !pure_ack)) {
        hit->open = false;
        hit = nullptr;
      }
    }
    if (!hit) {
      flows.push_back({});
      hit = &flows.back();
    }
    hit->members.push_back(i);
    if (p[i].protocol == Protocol::tcp && (p[i].flags & tcp::rst)) hit->open = false;
  }
  std::stable_sort(flows.begin(), flows.end(), [&](const OracleFlow& a, const OracleFlow& b) {
    return p[a.members.front()].timestamp < p[b.members.front()].timestamp;
  });
  return flows;
}

inline double port_type(int port) { return port <= 1023 ? 0.0 : port <= 49151 ? 1.0 : 2.0; }
inline double ip_type(const std::string& ip) { return ip.rfind("10.", 0) == 0 ? 1.0 : 0.0; }

/// 13 features in the canonical column order, from member packets alone.
inline std::array<double, 13> features(const std::vector<PacketRecord>& p, const OracleFlow& f) {
  const auto& first = p[f.members.front()];
  double src_bytes = 0, dst_bytes = 0, src_pkts = 0, dst_pkts = 0, src_tos = 0, dst_tos = 0;
  std::uint8_t sf = 0, df = 0;
  for (auto i : f.members) {
    if (from_first(p, f, i)) {
      if (src_pkts == 0) src_tos = p[i].tos;
      src_pkts += 1;
      src_bytes += p[i].payload_len;
      sf |= p[i].flags;
    } else {
      if (dst_pkts == 0) dst_tos = p[i].tos;
      dst_pkts += 1;
      dst_bytes += p[i].payload_len;
      df |= p[i].flags;
    }
  }
  double state = 6;
  if (first.protocol == Protocol::udp) {
    state = dst_pkts > 0 ? 5 : 4;
  } else if (first.protocol == Protocol::tcp) {
    const auto all = sf | df;
    if (all & tcp::rst) state = 3;
    else if (all & tcp::fin) state = 2;
    else if (((sf & tcp::syn) && (df & tcp::syn)) || dst_pkts > 0) state = 1;
    else state = 0;
  }
  const double dur = p[f.members.back()].timestamp - first.timestamp;
  return {ip_type(first.src_ip), ip_type(first.dst_ip), port_type(first.src_port), port_type(first.dst_port),
          dst_pkts > 0 ? 1.0 : 0.0, state, dur, src_tos, dst_tos, src_bytes, dst_bytes, src_bytes + dst_bytes,
          src_pkts + dst_pkts};
}

inline std::vector<std::array<double, 13>> brute_force(const std::vector<PacketRecord>& packets, double idle = 60.0,
                                                      double active = 3600.0) {
  const auto p = time_sorted(packets);
  std::vector<std::array<double, 13>> out;
  for (const auto& f : group(p, idle, active)) out.push_back(features(p, f));
  return out;
}

/// Random packets over a handful of hosts and ports, integer timestamps.
inline std::vector<PacketRecord> fuzz_packets(std::size_t n, std::uint64_t seed) {
  const std::vector<std::string> hosts{"10.0.0.1", "10.0.0.2", "192.168.1.5", "8.8.8.8"};
  const std::vector<int> ports{80, 443, 1234, 50000};
  std::vector<PacketRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto d = [&](std::uint64_t k) { return myopic::unit_draw(seed, i * 16 + k); };
    PacketRecord pk;
    pk.timestamp = std::floor(d(0) * 400.0);
    const auto a = static_cast<std::size_t>(d(1) * 4), b = (a + 1 + static_cast<std::size_t>(d(2) * 3)) % 4;
    pk.src_ip = hosts[a];
    pk.dst_ip = hosts[b];
    pk.src_port = ports[static_cast<std::size_t>(d(3) * 2)];
    pk.dst_port = ports[2 + static_cast<std::size_t>(d(4) * 2)];
    if (d(5) < 0.5) std::swap(pk.src_port, pk.dst_port);
    const double proto = d(6);
    pk.protocol = proto < 0.7 ? Protocol::tcp : proto < 0.95 ? Protocol::udp : Protocol::other;
    if (pk.protocol == Protocol::tcp) {
      const double fl = d(7);
      pk.flags = fl < 0.1 ? tcp::syn : fl < 0.2 ? (tcp::syn | tcp::ack) : fl < 0.3 ? tcp::fin : fl < 0.35 ? tcp::rst
                 : fl < 0.6 ? tcp::ack : (tcp::ack | tcp::psh);
      pk.payload_len = (pk.flags & (tcp::syn | tcp::fin | tcp::rst)) || fl < 0.45 ? 0 : static_cast<int>(d(8) * 1500);
    } else {
      pk.payload_len = static_cast<int>(d(8) * 1500);
    }
    pk.tos = d(9) < 0.8 ? 0 : 32;
    out.push_back(pk);
  }
  return out;
}

/// Five client packets with payloads {100,200,0,50,0} and one SYN/ACK reply.
inline std::vector<PacketRecord> six_packet_flow() {
  auto mk = [](double t, const char* s, int sp, const char* d, int dp, std::uint8_t fl, int len) {
    PacketRecord p;
    p.timestamp = t;
    p.src_ip = s;
    p.src_port = sp;
    p.dst_ip = d;
    p.dst_port = dp;
    p.flags = fl;
    p.payload_len = len;
    return p;
  };
  const auto a = "10.0.0.7", b = "93.184.216.34";
  return {mk(0.0, a, 1234, b, 80, tcp::ack | tcp::psh, 100), mk(0.05, b, 80, a, 1234, tcp::syn | tcp::ack, 0),
          mk(0.1, a, 1234, b, 80, tcp::ack | tcp::psh, 200), mk(0.2, a, 1234, b, 80, tcp::ack, 0),
          mk(0.3, a, 1234, b, 80, tcp::ack | tcp::psh, 50),  mk(0.4, a, 1234, b, 80, tcp::ack, 0)};
}

}  // namespace oracle
