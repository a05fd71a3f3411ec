#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "myopic/common.hpp"

namespace myopic::flow {

enum class Protocol : std::uint8_t { tcp, udp, other };

namespace tcp {
inline constexpr std::uint8_t syn = 1;
inline constexpr std::uint8_t ack = 2;
inline constexpr std::uint8_t fin = 4;
inline constexpr std::uint8_t rst = 8;
inline constexpr std::uint8_t psh = 16;
}  // namespace tcp

inline constexpr int kMaxPayload = 1500;

/// One captured packet in canonical form.
///
/// Text form, one record per line:
///   timestamp,src_ip,src_port,dst_ip,dst_port,protocol,flags,payload_len,tos
/// with protocol in {TCP,UDP,OTHER} and flags a subset of "SAFRP" or "-".
struct PacketRecord {
  double timestamp = 0.0;
  std::string src_ip;
  std::string dst_ip;
  int src_port = 0;
  int dst_port = 0;
  Protocol protocol = Protocol::tcp;
  std::uint8_t flags = 0;
  int payload_len = 0;
  int tos = 0;

  bool operator==(const PacketRecord&) const = default;
};

std::string protocol_name(Protocol p);
std::string flags_string(std::uint8_t flags);
std::string to_line(const PacketRecord& p);
/// Throws std::invalid_argument naming the offending field.
PacketRecord parse_line(const std::string& line);
std::vector<PacketRecord> read_packets(std::istream& in);
void write_packets(std::ostream& out, const std::vector<PacketRecord>& packets);

/// Checks the record invariants (payload range, TCP-only flags).
bool is_valid(const PacketRecord& p);

enum class Label { background = 0, active = 1 };

/// Connection state derived from the flags observed in both directions.
enum class ConnState { request = 0, established = 1, finished = 2, reset = 3, udp_oneway = 4, udp_bidir = 5, other = 6 };

struct FlowKey {
  Protocol protocol = Protocol::tcp;
  std::string src_ip;
  int src_port = 0;
  std::string dst_ip;
  int dst_port = 0;

  auto operator<=>(const FlowKey&) const = default;
};

/// Bidirectional flow. "src" is the endpoint that sent the first packet.
struct FlowRecord {
  FlowKey key;
  double start = 0.0;
  double duration = 0.0;
  int src_tos = 0;
  int dst_tos = 0;
  std::int64_t src_bytes = 0;
  std::int64_t dst_bytes = 0;
  std::int64_t src_pkts = 0;
  std::int64_t dst_pkts = 0;
  std::uint8_t src_flags = 0;
  std::uint8_t dst_flags = 0;
  Label label = Label::background;

  std::int64_t tot_bytes() const { return src_bytes + dst_bytes; }
  std::int64_t tot_pkts() const { return src_pkts + dst_pkts; }
  bool bidirectional() const { return dst_pkts > 0; }
  ConnState state() const;
};

/// Aggregation timeouts; defaults follow common NetFlow exporter settings.
struct ExporterConfig {
  double idle_timeout = 60.0;
  double active_timeout = 3600.0;
};

/// Packets are stably sorted by timestamp first. A flow closes on FIN/RST
/// (the closing packet is included), on an idle gap > idle_timeout or once it
/// has been open longer than active_timeout. Output is ordered by start time.
std::vector<FlowRecord> aggregate_flows(std::vector<PacketRecord> packets, const ExporterConfig& cfg = {});

/// IPv4 prefix like "10.0.0.0/8".
struct Ipv4Prefix {
  std::uint32_t network = 0;
  int length = 0;
  static Ipv4Prefix parse(const std::string& cidr);
  bool contains(std::uint32_t addr) const;
};
std::optional<std::uint32_t> parse_ipv4(const std::string& s);

struct PortRange {
  int lo = 0;
  int hi = 0;
  int category = 0;
};

/// IANA ranges: well-known 0-1023, registered 1024-49151, dynamic 49152-65535.
std::vector<PortRange> iana_port_ranges();

/// Table 7 column order of the 13 flow features.
inline const std::vector<std::string> kFeatureNames{
    "SrcIPType", "DstIPType", "SrcPortType", "DstPortType", "FlowDirection", "ConnState", "Dur",
    "SrcToS",    "DstToS",    "SrcBytes",    "DstBytes",    "TotBytes",      "TotPkts"};

struct FeatureExtractor {
  std::vector<Ipv4Prefix> internal_prefixes;
  std::vector<PortRange> port_ranges = iana_port_ranges();

  std::array<double, 13> extract(const FlowRecord& f) const;
  Matrix extract_all(const std::vector<FlowRecord>& flows) const;
  int port_category(int port) const;
  bool is_internal(const std::string& ip) const;
  /// Content hash of the extractor configuration; X and its adversarial
  /// twin must be extracted by configurations with equal fingerprints.
  std::uint64_t fingerprint() const;
};

using LabelRule = std::function<Label(const FlowRecord&)>;

void apply_labels(std::vector<FlowRecord>& flows, const LabelRule& rule);

/// Appends a uniform [0, max_pad] byte chunk to every data-bearing packet sent
/// by an attacker UE, clamped to kMaxPayload. Zero-payload TCP packets
/// (handshake, pure ACKs, FIN/RST) are left alone. The draw for packet i
/// depends only on (seed, i), so larger max_pad never yields fewer bytes.
std::vector<PacketRecord> pad_payloads(const std::vector<PacketRecord>& packets,
                                       const std::set<std::string>& attacker_ues, int max_pad,
                                       std::uint64_t seed);

/// Identity used to pair a flow with its myopic variant.
using FlowId = std::tuple<FlowKey, double>;
FlowId flow_id(const FlowRecord& f);

struct PoisonResult {
  std::vector<FlowRecord> flows;
  std::vector<std::size_t> replaced;  // positions in the training set
};

/// Replaces ceil(ratio * #attacker flows) uniformly chosen attacker flows of
/// `training` by their myopic variants (matched by flow_id). Flows whose
/// source is not an attacker UE are never touched. Throws on ratio outside
/// [0,1] or when a selected flow has no variant.
PoisonResult poison_training_set(const std::vector<FlowRecord>& training, const std::set<std::string>& attacker_ues,
                                 double ratio, const std::vector<FlowRecord>& adversarial_flows,
                                 std::uint64_t seed);

std::string flows_to_delimited(const std::vector<FlowRecord>& flows, const FeatureExtractor& fx);

}  // namespace myopic::flow
