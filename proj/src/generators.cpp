#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "myopic/scenarios.hpp"

namespace myopic::scenarios {

std::string session_key(flow::Protocol p, const std::string& ip_a, int port_a, const std::string& ip_b, int port_b) {
  std::string a = ip_a + ":" + std::to_string(port_a), b = ip_b + ":" + std::to_string(port_b);
  if (b < a) std::swap(a, b);
  return flow::protocol_name(p) + "|" + a + "|" + b;
}

flow::LabelRule TrafficCapture::label_rule() const {
  return [this](const flow::FlowRecord& f) {
    auto it = sessions.find(session_key(f.key.protocol, f.key.src_ip, f.key.src_port, f.key.dst_ip, f.key.dst_port));
    return it == sessions.end() ? flow::Label::background : it->second;
  };
}

namespace {

std::string host_ip(int i) { return "10.0." + std::to_string(i / 250) + "." + std::to_string(1 + i % 250); }

struct SessionWriter {
  std::vector<flow::PacketRecord>& out;
  std::string client, server;
  int cport, sport;
  flow::Protocol proto;
  int tos;
  double t;

  void emit(bool from_client, std::uint8_t flags, int payload) {
    flow::PacketRecord p;
    p.timestamp = t;
    p.src_ip = from_client ? client : server;
    p.dst_ip = from_client ? server : client;
    p.src_port = from_client ? cport : sport;
    p.dst_port = from_client ? sport : cport;
    p.protocol = proto;
    p.flags = proto == flow::Protocol::tcp ? flags : 0;
    p.payload_len = payload;
    p.tos = tos;
    out.push_back(p);
  }
};

}  // namespace

TrafficCapture generate_traffic(const TrafficParams& p, std::uint64_t seed) {
  if (p.hosts < 2 || p.attackers < 1 || p.attackers >= p.hosts || p.sessions_per_host < 1 || p.span <= 300.0)
    throw std::invalid_argument("generate_traffic: invalid parameters");
  TrafficCapture cap;
  cap.internal_prefixes = {"10.0.0.0/8"};
  Rng rng(derive_seed(seed, "cs1/traffic"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  auto uint = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  for (int h = 0; h < p.attackers; ++h) cap.attackers.push_back(host_ip(h));
  using namespace flow::tcp;
  for (int h = 0; h < p.hosts; ++h) {
    const std::string ip = host_ip(h);
    const double active_share =
        h < p.attackers ? (p.attackers == 1 ? 0.5 : 0.9 - 0.8 * h / (p.attackers - 1.0)) : uni(0.1, 0.5);
    for (int s = 0; s < p.sessions_per_host; ++s) {
      const bool active = u01(rng) < active_share;
      // A minority of background sessions look heavier than usual.
      const bool heavy = !active && u01(rng) < 0.12;
      const bool udp = active ? u01(rng) < 0.1 : u01(rng) < 0.35;
      const std::string server =
          "93.184." + std::to_string(uint(0, 15)) + "." + std::to_string(uint(1, 60));
      int sport;
      if (udp)
        sport = active ? 443 : (u01(rng) < 0.7 ? 53 : 123);
      else
        sport = active ? std::vector<int>{443, 80, 8080, 993}[static_cast<std::size_t>(uint(0, 3))]
                       : std::vector<int>{443, 80, 5228}[static_cast<std::size_t>(uint(0, 2))];
      const int cport = 49152 + h % 50 * 300 + s;
      const int tos = u01(rng) < 0.8 ? 0 : 32;
      SessionWriter w{cap.packets, ip, server, cport, sport,
                      udp ? flow::Protocol::udp : flow::Protocol::tcp, tos, uni(0.0, p.span - 300.0)};
      auto gap = [&] { return active ? uni(0.05, 2.0) : uni(0.005, heavy ? 1.0 : 0.3); };

      if (udp) {
        const int rounds = active ? uint(5, 30) : uint(1, heavy ? 4 : 2);
        for (int r = 0; r < rounds; ++r) {
          w.emit(true, 0, active ? uint(200, 1300) : uint(30, 120));
          w.t += gap();
          w.emit(false, 0, active ? uint(200, 1300) : uint(40, heavy ? 600 : 200));
          w.t += gap();
        }
      } else {
        w.emit(true, syn, 0);
        w.t += gap() * 0.1;
        w.emit(false, syn | ack, 0);
        w.t += gap() * 0.1;
        w.emit(true, ack, 0);
        w.t += gap();
        const int rounds = active ? uint(4, 20) : uint(1, heavy ? 6 : 3);
        for (int r = 0; r < rounds; ++r) {
          w.emit(true, psh | ack, active ? uint(100, 900) : uint(20, 200));
          w.t += gap();
          const int responses = active ? uint(1, 3) : 1;
          for (int k = 0; k < responses; ++k) {
            w.emit(false, psh | ack, active ? uint(300, 1460) : uint(40, heavy ? 1000 : 400));
            w.t += gap() * 0.5;
          }
          w.emit(true, ack, 0);
          w.t += gap();
        }
        w.emit(true, fin | ack, 0);
        w.t += 0.01;
        w.emit(false, fin | ack, 0);
        w.t += 0.01;
        w.emit(true, ack, 0);
      }
      cap.sessions[session_key(w.proto, ip, cport, server, sport)] =
          active ? flow::Label::active : flow::Label::background;
    }
  }
  std::stable_sort(cap.packets.begin(), cap.packets.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return cap;
}

CqiDataset generate_cqi_features(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_cqi_features: empty dataset");
  Rng rng(derive_seed(seed, "cs2/features"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  auto uint = [&](int a, int b) { return static_cast<double>(std::uniform_int_distribution<int>(a, b)(rng)); };

  CqiDataset d;
  Matrix m(n, kCqiFeatures.size());
  d.cqi.resize(n);
  double rx_sn = uint(0, 100000), tx_sn = uint(0, 100000);
  for (std::size_t r = 0; r < n; ++r) {
    const double rsrp = uni(-125.0, -70.0);
    const double load = u01(rng);
    const double rsrq = std::clamp(-3.0 - 16.5 * (0.45 * (-70.0 - rsrp) / 55.0 + 0.55 * load), -19.5, -3.0);
    const double quality = 0.6 * (rsrp + 125.0) / 55.0 + 0.4 * (rsrq + 19.5) / 16.5;
    const double cqi = std::clamp(std::round(15.0 * quality + 0.15 * g(rng)), 0.0, 15.0);
    const double phr = std::clamp(std::round(40.0 + 0.5 * (rsrp + 70.0) + 2.0 * g(rng)), -23.0, 40.0);
    const double prb_dl = uint(1, 100);
    const double tbs_dl = std::round(prb_dl * 168.0 * (0.15 + 0.37 * cqi) * (1.0 + 0.05 * g(rng)));
    const double pdu_dl = std::ceil(tbs_dl / 12000.0) + uint(0, 3);
    const double prb_ul = uint(1, 100);
    const double tbs_ul = std::round(prb_ul * 168.0 * uni(0.5, 4.0));
    const double pdu_ul = std::ceil(tbs_ul / 12000.0) + uint(0, 3);
    const double pkt_rx = uint(1, 400);
    const double byt_rx = std::round(pkt_rx * uni(60.0, 1400.0));
    const double pkt_tx = uint(1, 400);
    rx_sn += pkt_rx;
    tx_sn += pkt_tx;
    const double row[] = {rsrq,   rsrp,          phr,          prb_dl,          pdu_dl,        tbs_dl,
                          prb_ul, pdu_ul,        tbs_ul,       rx_sn,           pkt_rx,        byt_rx,
                          tx_sn,  1000.0 / pkt_rx, 1000.0 / pkt_tx, uint(0, 1023)};
    std::copy(std::begin(row), std::end(row), m.row(r).begin());
    d.cqi[r] = cqi;
  }
  d.table = rsp::RawTable::from_matrix(kCqiFeatures, std::move(m));
  return d;
}

std::string mobility_name(Mobility m) { return m == Mobility::driving ? "driving" : "static"; }

CqiSeries generate_cqi_series(Mobility mob, std::size_t length, std::uint64_t seed, double lo, double hi) {
  if (length == 0 || lo > hi) throw std::invalid_argument("generate_cqi_series: invalid parameters");
  Rng rng(derive_seed(seed, "cs3/series", mob == Mobility::driving ? 1 : 0));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  CqiSeries s;
  s.mobility = mob;
  s.name = mobility_name(mob);
  const double move_p = mob == Mobility::driving ? 0.5 : 0.2;
  const int max_step = mob == Mobility::driving ? 2 : 1;
  double v = std::round(lo + (hi - lo) * (0.3 + 0.4 * u01(rng)));
  for (std::size_t t = 0; t < length; ++t) {
    s.timestamps.push_back(static_cast<double>(t));
    s.cqi.push_back(v);
    if (u01(rng) < move_p) {
      const int step = 1 + static_cast<int>(u01(rng) * max_step);
      v += u01(rng) < 0.5 ? -step : step;
      if (v < lo) v = 2 * lo - v;
      if (v > hi) v = 2 * hi - v;
      v = std::clamp(v, lo, hi);
    }
  }
  return s;
}

std::vector<std::string> iq_schema() {
  std::vector<std::string> s;
  for (int i = 0; i < kIqPairs; ++i) s.push_back("I" + std::to_string(i));
  for (int i = 0; i < kIqPairs; ++i) s.push_back("Q" + std::to_string(i));
  return s;
}

namespace {

using cd = std::complex<double>;

// Symbols of one modulation; `rng` supplies the data bits.
std::vector<cd> modulate(int mod, int count, Rng& rng, double& phase) {
  std::uniform_int_distribution<int> bit(0, 1), sym8(0, 7);
  std::vector<cd> out;
  const double pi = std::numbers::pi;
  std::vector<double> bits(static_cast<std::size_t>(count));
  for (auto& b : bits) b = bit(rng) ? 1.0 : -1.0;
  for (int n = 0; n < count; ++n) {
    switch (mod) {
      case 0: out.emplace_back(bits[static_cast<std::size_t>(n)], 0.0); break;
      case 1: out.emplace_back(bits[static_cast<std::size_t>(n)] / std::sqrt(2.0), (bit(rng) ? 1.0 : -1.0) / std::sqrt(2.0)); break;
      case 2: out.push_back(std::polar(1.0, pi / 4.0 * sym8(rng))); break;
      case 3:
        phase += pi * 0.5 * bits[static_cast<std::size_t>(n)];
        out.push_back(std::polar(1.0, phase));
        break;
      case 4: {
        const double prev = n > 0 ? bits[static_cast<std::size_t>(n - 1)] : bits[0];
        const double next = n + 1 < count ? bits[static_cast<std::size_t>(n + 1)] : bits[static_cast<std::size_t>(n)];
        phase += pi * 0.5 * (0.25 * prev + 0.5 * bits[static_cast<std::size_t>(n)] + 0.25 * next);
        out.push_back(std::polar(1.0, phase));
        break;
      }
      default: {
        std::uniform_real_distribution<double> f(0.01, 0.05);
        const double freq = f(rng);
        phase += 2.0 * std::sin(2.0 * pi * freq * n);
        out.push_back(std::polar(1.0, phase));
      }
    }
  }
  return out;
}

}  // namespace

IqDataset generate_iq(std::size_t per_class, double snr_db, std::uint64_t seed) {
  if (per_class == 0) throw std::invalid_argument("generate_iq: per_class must be positive");
  IqDataset d;
  d.schema = iq_schema();
  const std::size_t classes = kModulations.size();
  d.x = Matrix(per_class * classes, 2 * kIqPairs);
  const double noise_sd = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
  for (std::size_t c = 0; c < classes; ++c) {
    // The preamble depends only on the modulation.
    Rng pilot_rng(fnv1a(kModulations[c]));
    double pilot_phase = 0.0;
    const auto pilot = modulate(static_cast<int>(c), kIqPilot, pilot_rng, pilot_phase);
    for (std::size_t k = 0; k < per_class; ++k) {
      const std::size_t r = k * classes + c;
      Rng rng(derive_seed(seed, "cs4/signal", r));
      std::normal_distribution<double> noise(0.0, noise_sd);
      double phase = pilot_phase;
      const auto payload = modulate(static_cast<int>(c), kIqPairs - kIqPilot, rng, phase);
      for (int n = 0; n < kIqPairs; ++n) {
        const cd s = n < kIqPilot ? pilot[static_cast<std::size_t>(n)] : payload[static_cast<std::size_t>(n - kIqPilot)];
        d.x(r, static_cast<std::size_t>(n)) = s.real() + noise(rng);
        d.x(r, static_cast<std::size_t>(kIqPairs + n)) = s.imag() + noise(rng);
      }
    }
  }
  d.labels.resize(d.x.rows());
  for (std::size_t r = 0; r < d.x.rows(); ++r) d.labels[r] = static_cast<int>(r % classes);
  d.snr.assign(d.x.rows(), snr_db);
  return d;
}

PowerDataset generate_power_data(const mimo::MimoTopology& topology, std::size_t n, std::uint64_t seed) {
  topology.validate();
  if (n == 0) throw std::invalid_argument("generate_power_data: empty dataset");
  PowerDataset d;
  d.topology = topology;
  const std::size_t k = topology.size();
  d.x = Matrix(n, k);
  d.shares = Matrix(n, k);
  d.positions = Matrix(n, 2 * k);
  Rng rng(derive_seed(seed, "cs5/layouts"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<mimo::Point> pos(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto g = static_cast<std::size_t>(topology.serving[j]);
      const auto& c = topology.cells[g];
      do {
        pos[j] = {c.x0 + (c.x1 - c.x0) * u01(rng), c.y0 + (c.y1 - c.y0) * u01(rng)};
      } while (mimo::distance(pos[j], topology.gnbs[g]) < 10.0);
    }
    const auto f = mimo::distance_features(topology, pos);
    const auto p = mimo::ground_truth_power(topology, pos);
    for (std::size_t j = 0; j < k; ++j) {
      d.x(r, j) = f[j];
      d.shares(r, j) = p[j] / topology.budget;
      d.positions(r, j) = pos[j].x;
      d.positions(r, k + j) = pos[j].y;
    }
  }
  return d;
}

int slice_rule(double use_case, double /*gbr*/, double /*plr*/, double pdb) {
  if (use_case <= 1.0) return 1;  // MMTC
  return pdb <= 10.0 ? 2 : 0;     // URLLC : eMBB
}

SliceDataset generate_slices(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_slices: empty dataset");
  Rng rng(derive_seed(seed, "cs6/slices"));
  auto uint = [&](int a, int b) { return static_cast<double>(std::uniform_int_distribution<int>(a, b)(rng)); };
  SliceDataset d;
  Matrix m(n, kSliceFeatures.size());
  d.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(r % 3);
    double use_case, gbr, plr, pdb;
    if (label == 1) {
      use_case = uint(0, 1);
      gbr = 0.0;
      plr = 1e-2;
      pdb = std::vector<double>{50, 100, 300}[static_cast<std::size_t>(uint(0, 2))];
    } else {
      use_case = uint(2, 7);
      gbr = uint(0, 1);
      plr = kPacketLossRates[static_cast<std::size_t>(uint(0, 1))];
      pdb = label == 2 ? std::vector<double>{5, 10}[static_cast<std::size_t>(uint(0, 1))]
                       : std::vector<double>{100, 300}[static_cast<std::size_t>(uint(0, 1))];
    }
    const double row[] = {use_case, uint(1, 20), uint(0, 1), uint(1, 7), uint(0, 23), gbr, plr, pdb};
    std::copy(std::begin(row), std::end(row), m.row(r).begin());
    d.labels[r] = slice_rule(use_case, gbr, plr, pdb);
  }
  d.table = rsp::RawTable::from_matrix(kSliceFeatures, std::move(m));
  return d;
}

std::size_t default_size(int scenario) {
  switch (scenario) {
    case 1: return 10;    // sessions per host
    case 2: return 3000;  // rows
    case 3: return 1200;  // seconds per trace
    case 4: return 200;   // signals per modulation
    case 5: return 2000;  // training layouts
    case 6: return 3000;  // rows
  }
  throw std::invalid_argument("unknown scenario " + std::to_string(scenario));
}

ScenarioData generate_scenario_data(int scenario, std::size_t size, std::uint64_t seed) {
  if (size == 0) size = default_size(scenario);
  auto bounds = [&](std::size_t lo, std::size_t hi) {
    if (size < lo || size > hi)
      throw std::invalid_argument("scenario " + std::to_string(scenario) + ": size must lie in [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  switch (scenario) {
    case 1: {
      bounds(1, 100);
      TrafficParams p;
      p.sessions_per_host = static_cast<int>(size);
      return generate_traffic(p, seed);
    }
    case 2: bounds(100, 200000); return generate_cqi_features(size, seed);
    case 3: {
      bounds(64, 100000);
      return std::vector<CqiSeries>{generate_cqi_series(Mobility::stationary, size, seed),
                                    generate_cqi_series(Mobility::driving, size, seed)};
    }
    case 4: bounds(2, 5000); return generate_iq(size, 10.0, seed);
    case 5: bounds(10, 100000); return generate_power_data(mimo::MimoTopology::grid(seed), size, seed);
    case 6: bounds(30, 200000); return generate_slices(size, seed);
  }
  throw std::invalid_argument("unknown scenario " + std::to_string(scenario));
}

}  // namespace myopic::scenarios
