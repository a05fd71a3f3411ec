#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "myopic/scenarios.hpp"
#include "myopic/serialize.hpp"

namespace myopic::config {

/// Every problem found in a configuration, one message per violation.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Experiment configuration (JSON). Keys:
///   scenarios      list of case-study ids 1..6 (required)
///   seed           master seed
///   output         output directory
///   jobs           OpenMP threads, 0 = runtime default
///   stages         subset of inference/training/online
///   defenses       subset of adversarial_training/feature_removal/distillation
///   data           {size, path}
///   model          model spec (see README)
///   scope          {full, known, conscious, affected}
///   perturbation   {multipliers, ratios, trials, aug_fraction}
/// Unknown keys are errors.
struct ExperimentConfig {
  std::vector<int> scenarios;
  std::uint64_t seed = 1;
  std::string output = "out";
  int jobs = 0;
  std::vector<std::string> stages;
  std::vector<std::string> defenses;
  std::size_t size = 0;
  std::string data_path;
  std::optional<models::ModelSpec> model;
  std::optional<threat::FeatureScope> scope;
  std::vector<double> multipliers = rsp::kDefaultMultipliers;
  std::vector<double> ratios{0.25, 0.5, 0.75, 0.9};
  int trials = 0;
  double aug_fraction = 0.05;

  Json to_json() const;
  /// Content hash of the canonical JSON form.
  std::string fingerprint() const;
  scenarios::CaseConfig case_config(int scenario) const;
  /// Collects every violation; throws ConfigError when there is any.
  void validate() const;
};

/// Strict parse followed by validate().
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

inline const std::vector<std::string> kDefenseNames{"adversarial_training", "feature_removal", "distillation"};

}  // namespace myopic::config
