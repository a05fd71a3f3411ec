#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "myopic/common.hpp"
#include "myopic/flow.hpp"
#include "myopic/mimo.hpp"
#include "myopic/models.hpp"
#include "myopic/perturbation.hpp"
#include "myopic/report.hpp"
#include "myopic/threat_model.hpp"

namespace myopic::scenarios {

// ---------------------------------------------------------------------------
// CS1: traffic of an enterprise network, flows labelled active/background.

struct TrafficParams {
  int hosts = 120;
  int attackers = 6;
  int sessions_per_host = 10;
  double span = 3600.0;  // seconds of capture
};

struct TrafficCapture {
  std::vector<flow::PacketRecord> packets;
  std::map<std::string, flow::Label> sessions;  // session_key -> label
  std::vector<std::string> attackers;           // attacker UE addresses
  std::vector<std::string> internal_prefixes{"10.0.0.0/8"};
  std::string source = "synthetic";

  flow::LabelRule label_rule() const;
};

/// Direction-free key of a 5-tuple.
std::string session_key(flow::Protocol p, const std::string& ip_a, int port_a, const std::string& ip_b, int port_b);

/// Attacker i (of n) sends an active share of 0.9 - 0.8 * i / (n - 1) of its
/// sessions; benign hosts draw theirs from [0.1, 0.5]. Background sessions
/// are short with small payloads, active sessions long with large ones.
TrafficCapture generate_traffic(const TrafficParams& p, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CS2: CQI from radio and traffic measurements.

inline const std::vector<std::string> kCqiFeatures{
    "RSRQ",     "RSRP",     "PHR",   "totPrbDL", "totPduDL", "totTbsDL", "totPrbUL",  "totPduUL",
    "totTbsUL", "pktRxSn",  "pktRx", "pktRxByt", "pktTxSn",  "pktRxAiat", "pktTxAiat", "SFN"};

struct CqiDataset {
  rsp::RawTable table;
  std::vector<double> cqi;
  std::string source = "synthetic";
};

/// CQI follows radio quality (RSRP, RSRQ); throughput counters carry it
/// through the transport block size; packet counters are independent of it.
CqiDataset generate_cqi_features(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CS3: CQI reports at 1 Hz.

enum class Mobility { stationary, driving };
std::string mobility_name(Mobility m);

struct CqiSeries {
  std::string name;
  Mobility mobility = Mobility::stationary;
  std::vector<double> timestamps;
  std::vector<double> cqi;
};

/// Bounded random walk on [lo, hi]; driving takes larger steps more often.
CqiSeries generate_cqi_series(Mobility m, std::size_t length, std::uint64_t seed, double lo = 0.0, double hi = 15.0);

// ---------------------------------------------------------------------------
// CS4: I/Q samples of six modulations.

inline const std::vector<std::string> kModulations{"BPSK", "QPSK", "8PSK", "CPFSK", "GFSK", "WBFM"};
inline constexpr int kIqPairs = 128;
inline constexpr int kIqPilot = 16;

struct IqDataset {
  std::vector<std::string> schema;  // I0..I127, Q0..Q127
  Matrix x;
  std::vector<int> labels;
  std::vector<double> snr;
  std::string source = "synthetic";
};

/// Class-balanced: `per_class` signals per modulation. Each signal starts
/// with a fixed per-modulation preamble of kIqPilot symbols followed by
/// random payload, unit average power plus AWGN at `snr_db`.
IqDataset generate_iq(std::size_t per_class, double snr_db, std::uint64_t seed);
std::vector<std::string> iq_schema();

// ---------------------------------------------------------------------------
// CS5: power allocation training pairs.

struct PowerDataset {
  mimo::MimoTopology topology;  // evaluation layout
  Matrix x;                     // distance features per sampled layout
  Matrix shares;                // ground-truth power / budget
  Matrix positions;             // x0..x19 then y0..y19 per layout
  std::string source = "synthetic";
};

/// `n` layouts with the gNB geometry of `topology` and UEs redrawn in their cells.
PowerDataset generate_power_data(const mimo::MimoTopology& topology, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CS6: slice assignment.

inline const std::vector<std::string> kSliceFeatures{"UseCase", "UEcategory",        "Technology",     "Day",
                                                     "Hour",    "GuaranteedBitRate", "PacketLossRate", "PacketDelayBudget"};
inline const std::vector<std::string> kSliceNames{"eMBB", "MMTC", "URLLC"};
inline const std::vector<double> kPacketDelayBudgets{5, 10, 50, 100, 300};
inline const std::vector<double> kPacketLossRates{1e-6, 1e-3, 1e-2};

/// The labelling rule: use cases 0-1 are MMTC; otherwise URLLC iff the
/// packet delay budget is at most 10 ms, eMBB otherwise.
int slice_rule(double use_case, double gbr, double plr, double pdb);

struct SliceDataset {
  rsp::RawTable table;
  std::vector<int> labels;
  std::string source = "synthetic";
};

/// Class-balanced; eMBB and URLLC share use case, GBR and PLR distributions.
SliceDataset generate_slices(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------

using ScenarioData =
    std::variant<TrafficCapture, CqiDataset, std::vector<CqiSeries>, IqDataset, PowerDataset, SliceDataset>;

/// Default desk-scale size per scenario (sessions per host, rows, trace
/// length, signals per class, layouts, rows).
std::size_t default_size(int scenario);

/// Throws std::invalid_argument on an unknown scenario or a size outside the
/// documented bounds.
ScenarioData generate_scenario_data(int scenario, std::size_t size, std::uint64_t seed);

struct IngestLog {
  std::size_t rows = 0;
  std::size_t skipped = 0;
  std::vector<std::string> messages;
};

/// Reads a delimited file with a named header in the scenario's adapter
/// format (see README). Malformed rows are counted, skipped and logged;
/// missing schema or ground-truth columns are errors.
ScenarioData ingest_real_dataset(int scenario, const std::string& path, IngestLog& log);

/// Writes a dataset in its scenario's adapter format, so that
/// ingest_real_dataset reads it back unchanged.
std::string export_dataset(const ScenarioData& data);

// ---------------------------------------------------------------------------

struct CaseConfig {
  int scenario = 0;
  std::size_t size = 0;             // 0: default_size
  std::string data_path;            // replication mode when set
  std::optional<models::ModelSpec> model;
  std::vector<double> multipliers = rsp::kDefaultMultipliers;
  std::vector<double> ratios{0.25, 0.5, 0.75, 0.9};
  int trials = 0;                   // 0: scenario default
  std::vector<std::string> defenses;  // empty: scenario default
  std::vector<std::string> stages;    // empty: all stages the scenario runs
  double aug_fraction = 0.05;
  std::optional<threat::FeatureScope> scope;  // validated before any work
  Exec exec = Exec::parallel;
  bool baseline_only = false;       // train and score the baseline, no attack stage

  bool stage_enabled(const std::string& s) const;
};

/// The built-in attack scopes of a scenario, each named.
std::vector<std::pair<std::string, threat::FeatureScope>> scenario_scopes(int scenario);

/// Runs the whole workflow of one case study.
report::ExperimentReport run_case_study(const CaseConfig& cfg, std::uint64_t seed);

// Individual drivers (used by run_case_study).
report::ExperimentReport run_cs1(const CaseConfig& cfg, std::uint64_t seed);
report::ExperimentReport run_cs2(const CaseConfig& cfg, std::uint64_t seed);
report::ExperimentReport run_cs3(const CaseConfig& cfg, std::uint64_t seed);
report::ExperimentReport run_cs4(const CaseConfig& cfg, std::uint64_t seed);
report::ExperimentReport run_cs5(const CaseConfig& cfg, std::uint64_t seed);
report::ExperimentReport run_cs6(const CaseConfig& cfg, std::uint64_t seed);

/// `k` distinct I/Q positions drawn uniformly from the 256.
std::vector<std::string> random_iq_positions(std::size_t k, std::uint64_t seed);

/// Accuracy of `model` on `v` after additive_std perturbation of each
/// position set at every multiplier, values clamped to [-clamp, clamp].
/// Rows: position sets; columns: multipliers.
Matrix iq_position_attack(const models::Model& model, const Matrix& v, const std::vector<int>& labels,
                          const std::vector<std::vector<std::string>>& position_sets,
                          const std::vector<double>& multipliers, const std::map<std::string, double>& std_reference,
                          double clamp = 10.0, Exec exec = Exec::parallel);

/// Second network of CS4 (dense stand-in for the published convolutional one).
models::ModelSpec iq_network_spec(std::uint64_t seed);

/// Default model of each scenario.
models::ModelSpec default_model(int scenario, std::uint64_t seed);

}  // namespace myopic::scenarios
