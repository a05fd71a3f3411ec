#pragma once

// Helpers shared by the case-study drivers.

#include <chrono>
#include <string>
#include <vector>

#include "myopic/attack.hpp"
#include "myopic/defense.hpp"
#include "myopic/scenarios.hpp"

namespace myopic::scenarios::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

inline std::string scenario_tag(int id) { return "cs" + std::to_string(id); }

/// Clean/adversarial evaluation twins after one RsP level. Records rejected
/// by the integrity check drop out of both sides.
struct Twins {
  attack::EvalSet clean;
  attack::EvalSet adversarial;
  std::size_t rejected = 0;
};

inline Twins rsp_twins(const rsp::RawTable& v, const std::vector<double>& truth, const rsp::PerturbationSpec& spec,
                       std::size_t level, std::uint64_t seed, Exec exec) {
  const auto res = rsp::apply_rsp(v, spec, level, seed, exec);
  Twins t;
  t.rejected = res.log.rejected_count();
  t.clean.x = v.values.select_rows(res.records.ids);
  for (auto id : res.records.ids) t.clean.truth.push_back(truth[id]);
  t.adversarial.x = res.records.values;
  t.adversarial.truth = t.clean.truth;
  return t;
}

inline int trials_or(const CaseConfig& cfg, int fallback) { return cfg.trials > 0 ? cfg.trials : fallback; }

inline models::ModelSpec model_or(const CaseConfig& cfg, std::uint64_t seed) {
  if (cfg.model) return *cfg.model;
  return default_model(cfg.scenario, seed);
}

inline bool defense_enabled(const CaseConfig& cfg, const std::string& name) {
  if (cfg.defenses.empty()) return true;
  for (const auto& d : cfg.defenses)
    if (d == name) return true;
  return false;
}

/// Population std of every column of `x`, keyed by schema name.
inline std::map<std::string, double> column_std(const Matrix& x, const std::vector<std::string>& schema) {
  std::map<std::string, double> out;
  for (std::size_t c = 0; c < schema.size(); ++c) out[schema[c]] = population_std(column(x, c));
  return out;
}

/// Feature names of a user-supplied scope that the schema does not know.
void check_scope_schema(const threat::FeatureScope& scope, const std::vector<std::string>& schema);

/// Appends the tradeoff row and the residual curve of one defense.
void record_defense(report::ExperimentReport& rep, const std::string& scenario, const std::string& scope,
                    const std::string& defense, const defense::DefenseEvaluation& ev, const std::string& figure = "");

}  // namespace myopic::scenarios::detail
