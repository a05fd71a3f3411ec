#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "myopic/common.hpp"
#include "myopic/mimo.hpp"
#include "myopic/models.hpp"
#include "myopic/perturbation.hpp"
#include "myopic/threat_model.hpp"

namespace myopic::attack {

enum class Stage { inference, training, online };
std::string stage_name(Stage s);
Stage stage_from_name(const std::string& s);

struct CurvePoint {
  double x = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population std over trials, 0 for a single trial
  int trials = 1;
};

/// Summarizes trial values at one swept x.
CurvePoint summarize(double x, std::span<const double> values);

struct DegradationCurve {
  std::string scenario;
  std::string stage;
  std::string scope;
  std::string metric;
  std::string defense = "none";
  std::vector<CurvePoint> points;

  static std::string header();
  /// Rows: scenario,stage,scope,x,metric,mean,std,trials,defense
  std::string to_delimited() const;
};

struct AttackPlan {
  std::string scenario;
  Stage stage = Stage::inference;
  rsp::PerturbationSpec perturbation;
  std::vector<double> sweep;  // intensity levels, or replacement ratios for the training stage
  int trials = 1;
  std::vector<std::string> attackers;

  /// Throws std::invalid_argument on trials < 1 or training ratios outside [0,1].
  void validate() const;
};

/// Evaluation rows with ground truth and an optional group tag (e.g. UE id).
struct EvalSet {
  Matrix x;
  std::vector<double> truth;
  std::vector<std::string> groups;  // empty or one per row
};

struct MetricOptions {
  threat::Metric metric = threat::Metric::accuracy;
  int positive_label = 1;   // F1
  bool rounded = false;     // regression accuracy: round predictions to the nearest integer
  double tau = 0.0;         // regression success margin
};

/// Metric of a prediction set against truth. Regression accuracy counts
/// predictions that round to the target.
double evaluate_metric(const models::Predictions& p, std::span<const double> truth, const MetricOptions& opt);
/// Predictions reduced to one scalar per row (label or value).
std::vector<double> scalar_predictions(const models::Predictions& p);

struct InferencePoint {
  double clean = 0.0;
  double adversarial = 0.0;
  double degradation = 0.0;
  std::size_t successes = 0;
  std::size_t rows = 0;
};

struct InferenceResult {
  InferencePoint aggregate;
  std::map<std::string, InferencePoint> per_group;
};

/// Compares the model on row-aligned clean/adversarial twins. Throws
/// std::invalid_argument when the twins differ in size, truth or grouping.
InferenceResult run_inference_attack(const models::Model& model, const EvalSet& clean, const EvalSet& adversarial,
                                     const MetricOptions& opt, bool group_by = false, Exec exec = Exec::parallel);

/// One (ratio, trial) evaluation: builds the poisoned training set from
/// `trial_seed`, retrains and returns one value per metric on the untouched
/// validation set.
using TrainingTrial = std::function<std::vector<double>(double ratio, std::uint64_t trial_seed)>;

/// Sweeps the ratios (ratio 0 is added as the control when absent) and
/// returns one curve per metric name, x in percent. Trial t uses
/// derive_seed(seed, "attack/training", t) at every ratio.
std::vector<DegradationCurve> run_training_attack(const TrainingTrial& trial, std::vector<double> ratios, int trials,
                                                  const std::vector<std::string>& metrics, std::uint64_t seed,
                                                  Exec exec = Exec::parallel);

enum class SpoofMode { none, floor_zero, jitter };
std::string spoof_name(SpoofMode m);
SpoofMode spoof_from_name(const std::string& s);

struct OnlineAttackConfig {
  SpoofMode mode = SpoofMode::floor_zero;
  int period = 60;    // seconds between spoofed reports
  int horizon = 600;  // seconds of operation
  int phase = 0;      // first spoof offset
  int max_jitter = 3;
  double lo = 0.0;    // reportable domain
  double hi = 15.0;
  std::uint64_t seed = 0;
};

struct OnlineAttackResult {
  std::vector<double> reported;              // attacked twin input
  std::vector<std::size_t> spoofed_at;       // offsets of spoofed reports
  std::vector<double> clean_predictions;     // prediction made for step t
  std::vector<double> attacked_predictions;
  std::vector<double> crmse_clean;
  std::vector<double> crmse_attacked;
  std::vector<double> differential;          // attacked - clean
};

/// Runs two copies of `model` over `series` (1 Hz, operation phase only).
/// The clean twin consumes the true values, the attacked twin the spoofed
/// stream; both CRMSE series are measured against the true values.
/// Throws std::invalid_argument if horizon < period or the series is too short.
OnlineAttackResult run_online_attack(const models::OnlineModel& model, std::span<const double> series,
                                     const OnlineAttackConfig& cfg);

/// Reported value for a spoofed step; jitter draws a nonzero offset in
/// [-max_jitter, max_jitter] and clamps to [lo, hi].
double spoof_value(double truth, const OnlineAttackConfig& cfg, std::uint64_t index);

/// Cumulative RMSE after each step.
std::vector<double> cumulative_rmse(std::span<const double> truth, std::span<const double> predicted);

/// Position sets for steps 0..steps: attackers move radially away from their
/// serving gNB by s/steps * max_offset, clamped to their cell. Throws
/// std::invalid_argument if an attacker is outside its serving cell.
std::vector<std::vector<mimo::Point>> spoof_positions(const mimo::MimoTopology& topo,
                                                      const std::vector<std::size_t>& attackers, int steps = 8,
                                                      double max_offset = 300.0);

}  // namespace myopic::attack
