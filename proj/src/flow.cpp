#include "myopic/flow.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace myopic::flow {

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::tcp: return "TCP";
    case Protocol::udp: return "UDP";
    case Protocol::other: return "OTHER";
  }
  return "OTHER";
}

std::string flags_string(std::uint8_t flags) {
  std::string s;
  if (flags & tcp::syn) s += 'S';
  if (flags & tcp::ack) s += 'A';
  if (flags & tcp::fin) s += 'F';
  if (flags & tcp::rst) s += 'R';
  if (flags & tcp::psh) s += 'P';
  return s.empty() ? "-" : s;
}

std::string to_line(const PacketRecord& p) {
  std::ostringstream os;
  os.precision(17);
  os << p.timestamp << ',' << p.src_ip << ',' << p.src_port << ',' << p.dst_ip << ',' << p.dst_port << ','
     << protocol_name(p.protocol) << ',' << flags_string(p.flags) << ',' << p.payload_len << ',' << p.tos;
  return os.str();
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

int parse_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad ") + what + ": '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument(std::string("bad ") + what + ": '" + s + "'");
  return v;
}

}  // namespace

PacketRecord parse_line(const std::string& line) {
  auto f = split(line, ',');
  if (f.size() != 9) throw std::invalid_argument("packet record needs 9 fields, got " + std::to_string(f.size()));
  PacketRecord p;
  try {
    std::size_t pos = 0;
    p.timestamp = std::stod(f[0], &pos);
    if (pos != f[0].size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad timestamp: '" + f[0] + "'");
  }
  p.src_ip = f[1];
  p.src_port = parse_int(f[2], "src_port");
  p.dst_ip = f[3];
  p.dst_port = parse_int(f[4], "dst_port");
  if (f[5] == "TCP") p.protocol = Protocol::tcp;
  else if (f[5] == "UDP") p.protocol = Protocol::udp;
  else if (f[5] == "OTHER") p.protocol = Protocol::other;
  else throw std::invalid_argument("bad protocol: '" + f[5] + "'");
  if (f[6] != "-") {
    for (char c : f[6]) {
      switch (c) {
        case 'S': p.flags |= tcp::syn; break;
        case 'A': p.flags |= tcp::ack; break;
        case 'F': p.flags |= tcp::fin; break;
        case 'R': p.flags |= tcp::rst; break;
        case 'P': p.flags |= tcp::psh; break;
        default: throw std::invalid_argument("bad flags: '" + f[6] + "'");
      }
    }
  }
  p.payload_len = parse_int(f[7], "payload_len");
  p.tos = parse_int(f[8], "tos");
  if (!is_valid(p)) throw std::invalid_argument("packet record violates invariants: " + line);
  return p;
}

bool is_valid(const PacketRecord& p) {
  if (p.payload_len < 0 || p.payload_len > kMaxPayload) return false;
  if (p.src_port < 0 || p.src_port > 65535 || p.dst_port < 0 || p.dst_port > 65535) return false;
  if (p.protocol != Protocol::tcp && p.flags != 0) return false;
  return true;
}

std::vector<PacketRecord> read_packets(std::istream& in) {
  std::vector<PacketRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_line(line));
  }
  return out;
}

void write_packets(std::ostream& out, const std::vector<PacketRecord>& packets) {
  for (const auto& p : packets) out << to_line(p) << '\n';
}

ConnState FlowRecord::state() const {
  const std::uint8_t all = src_flags | dst_flags;
  switch (key.protocol) {
    case Protocol::tcp:
      if (all & tcp::rst) return ConnState::reset;
      if (all & tcp::fin) return ConnState::finished;
      if (((src_flags & tcp::syn) && (dst_flags & tcp::syn)) || bidirectional()) return ConnState::established;
      return ConnState::request;
    case Protocol::udp:
      return bidirectional() ? ConnState::udp_bidir : ConnState::udp_oneway;
    case Protocol::other:
      return ConnState::other;
  }
  return ConnState::other;
}

namespace {

using Endpoint = std::pair<std::string, int>;
using CanonicalKey = std::tuple<Protocol, Endpoint, Endpoint>;

CanonicalKey canonical(const PacketRecord& p) {
  Endpoint a{p.src_ip, p.src_port}, b{p.dst_ip, p.dst_port};
  if (b < a) std::swap(a, b);
  return {p.protocol, a, b};
}

struct OpenFlow {
  FlowRecord rec;
  double last = 0.0;
  std::size_t order = 0;
  bool closing = false;  // FIN seen from both sides
};

}  // namespace

std::vector<FlowRecord> aggregate_flows(std::vector<PacketRecord> packets, const ExporterConfig& cfg) {
  std::stable_sort(packets.begin(), packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
  std::map<CanonicalKey, OpenFlow> open;
  std::vector<std::pair<std::size_t, FlowRecord>> done;
  std::size_t created = 0;

  auto finish = [&](std::map<CanonicalKey, OpenFlow>::iterator it) {
    done.emplace_back(it->second.order, std::move(it->second.rec));
    open.erase(it);
  };

  for (const auto& p : packets) {
    const auto ck = canonical(p);
    auto it = open.find(ck);
    if (it != open.end()) {
      const auto& of = it->second;
      const bool idle = p.timestamp - of.last > cfg.idle_timeout;
      const bool aged = p.timestamp - of.rec.start > cfg.active_timeout;
      const bool trailing_ack = p.protocol == Protocol::tcp && p.flags == tcp::ack && p.payload_len == 0;
      if (idle || aged || (of.closing && !trailing_ack)) {
        finish(it);
        it = open.end();
      }
    }
    if (it == open.end()) {
      OpenFlow of;
      of.rec.key = {p.protocol, p.src_ip, p.src_port, p.dst_ip, p.dst_port};
      of.rec.start = p.timestamp;
      of.last = p.timestamp;
      of.order = created++;
      it = open.emplace(ck, std::move(of)).first;
    }
    auto& of = it->second;
    auto& r = of.rec;
    const bool from_src = p.src_ip == r.key.src_ip && p.src_port == r.key.src_port;
    if (from_src) {
      if (r.src_pkts == 0) r.src_tos = p.tos;
      r.src_pkts += 1;
      r.src_bytes += p.payload_len;
      r.src_flags |= p.flags;
    } else {
      if (r.dst_pkts == 0) r.dst_tos = p.tos;
      r.dst_pkts += 1;
      r.dst_bytes += p.payload_len;
      r.dst_flags |= p.flags;
    }
    of.last = p.timestamp;
    r.duration = of.last - r.start;
    if (p.protocol == Protocol::tcp) {
      if (p.flags & tcp::rst) {
        finish(it);
        continue;
      }
      if ((r.src_flags & tcp::fin) && (r.dst_flags & tcp::fin)) of.closing = true;
    }
  }
  for (auto it = open.begin(); it != open.end();) {
    auto next = std::next(it);
    finish(it);
    it = next;
  }
  std::stable_sort(done.begin(), done.end(), [](const auto& a, const auto& b) {
    if (a.second.start != b.second.start) return a.second.start < b.second.start;
    return a.first < b.first;
  });
  std::vector<FlowRecord> out;
  out.reserve(done.size());
  for (auto& [order, rec] : done) out.push_back(std::move(rec));
  return out;
}

std::optional<std::uint32_t> parse_ipv4(const std::string& s) {
  const auto parts = split(s, '.');
  if (parts.size() != 4) return std::nullopt;
  std::uint32_t addr = 0;
  for (const auto& tok : parts) {
    if (tok.empty() || tok.size() > 3 || !std::all_of(tok.begin(), tok.end(), ::isdigit)) return std::nullopt;
    const int v = std::stoi(tok);
    if (v > 255) return std::nullopt;
    addr = (addr << 8) | static_cast<std::uint32_t>(v);
  }
  return addr;
}

Ipv4Prefix Ipv4Prefix::parse(const std::string& cidr) {
  const auto slash = cidr.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("prefix needs '/len': " + cidr);
  const auto addr = parse_ipv4(cidr.substr(0, slash));
  if (!addr) throw std::invalid_argument("bad prefix address: " + cidr);
  const int len = parse_int(cidr.substr(slash + 1), "prefix length");
  if (len < 0 || len > 32) throw std::invalid_argument("bad prefix length: " + cidr);
  Ipv4Prefix p;
  p.length = len;
  const std::uint32_t mask = len == 0 ? 0u : ~0u << (32 - len);
  p.network = *addr & mask;
  return p;
}

bool Ipv4Prefix::contains(std::uint32_t addr) const {
  const std::uint32_t mask = length == 0 ? 0u : ~0u << (32 - length);
  return (addr & mask) == network;
}

std::vector<PortRange> iana_port_ranges() { return {{0, 1023, 0}, {1024, 49151, 1}, {49152, 65535, 2}}; }

int FeatureExtractor::port_category(int port) const {
  for (const auto& r : port_ranges)
    if (port >= r.lo && port <= r.hi) return r.category;
  return -1;
}

bool FeatureExtractor::is_internal(const std::string& ip) const {
  const auto a = parse_ipv4(ip);
  if (!a) return false;
  return std::any_of(internal_prefixes.begin(), internal_prefixes.end(),
                     [&](const Ipv4Prefix& p) { return p.contains(*a); });
}

std::array<double, 13> FeatureExtractor::extract(const FlowRecord& f) const {
  return {is_internal(f.key.src_ip) ? 1.0 : 0.0,
          is_internal(f.key.dst_ip) ? 1.0 : 0.0,
          static_cast<double>(port_category(f.key.src_port)),
          static_cast<double>(port_category(f.key.dst_port)),
          f.bidirectional() ? 1.0 : 0.0,
          static_cast<double>(static_cast<int>(f.state())),
          f.duration,
          static_cast<double>(f.src_tos),
          static_cast<double>(f.dst_tos),
          static_cast<double>(f.src_bytes),
          static_cast<double>(f.dst_bytes),
          static_cast<double>(f.tot_bytes()),
          static_cast<double>(f.tot_pkts())};
}

Matrix FeatureExtractor::extract_all(const std::vector<FlowRecord>& flows) const {
  Matrix m(flows.size(), kFeatureNames.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto v = extract(flows[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

std::uint64_t FeatureExtractor::fingerprint() const {
  std::ostringstream os;
  for (const auto& p : internal_prefixes) os << p.network << '/' << p.length << ';';
  os << '|';
  for (const auto& r : port_ranges) os << r.lo << '-' << r.hi << ':' << r.category << ';';
  return fnv1a(os.str());
}

void apply_labels(std::vector<FlowRecord>& flows, const LabelRule& rule) {
  for (auto& f : flows) f.label = rule(f);
}

std::vector<PacketRecord> pad_payloads(const std::vector<PacketRecord>& packets,
                                       const std::set<std::string>& attacker_ues, int max_pad,
                                       std::uint64_t seed) {
  if (max_pad < 0) throw std::invalid_argument("pad_payloads: max_pad must be >= 0");
  auto out = packets;
  if (max_pad == 0) return out;
  const auto draw_seed = derive_seed(seed, "flow/pad");
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& p = out[i];
    if (!attacker_ues.contains(p.src_ip)) continue;
    if (p.protocol == Protocol::tcp && p.payload_len == 0) continue;
    const int pad = static_cast<int>(std::floor(unit_draw(draw_seed, i) * (max_pad + 1)));
    p.payload_len = std::min(kMaxPayload, p.payload_len + pad);
  }
  return out;
}

FlowId flow_id(const FlowRecord& f) { return {f.key, f.start}; }

PoisonResult poison_training_set(const std::vector<FlowRecord>& training, const std::set<std::string>& attacker_ues,
                                 double ratio, const std::vector<FlowRecord>& adversarial_flows,
                                 std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("poison_training_set: ratio must be in [0,1]");
  PoisonResult res{training, {}};
  std::vector<std::size_t> attacker_pos;
  for (std::size_t i = 0; i < training.size(); ++i)
    if (attacker_ues.contains(training[i].key.src_ip)) attacker_pos.push_back(i);
  const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(attacker_pos.size()) - 1e-9));
  if (k == 0) return res;
  std::map<FlowId, const FlowRecord*> variants;
  for (const auto& f : adversarial_flows) variants.emplace(flow_id(f), &f);
  const auto order = permutation(attacker_pos.size(), derive_seed(seed, "flow/poison"));
  for (std::size_t j = 0; j < k; ++j) {
    const auto pos = attacker_pos[order[j]];
    auto it = variants.find(flow_id(training[pos]));
    if (it == variants.end()) throw std::invalid_argument("poison_training_set: attacker flow has no myopic variant");
    res.flows[pos] = *it->second;
    res.replaced.push_back(pos);
  }
  std::sort(res.replaced.begin(), res.replaced.end());
  return res;
}

std::string flows_to_delimited(const std::vector<FlowRecord>& flows, const FeatureExtractor& fx) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) os << kFeatureNames[i] << ',';
  os << "Label\n";
  for (const auto& f : flows) {
    for (double v : fx.extract(f)) os << v << ',';
    os << (f.label == Label::active ? "active" : "background") << '\n';
  }
  return os.str();
}

}  // namespace myopic::flow
