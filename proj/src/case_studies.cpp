#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "case_common.hpp"
#include "myopic/flow.hpp"

namespace myopic::scenarios {

bool CaseConfig::stage_enabled(const std::string& s) const {
  if (baseline_only) return false;
  return stages.empty() || std::find(stages.begin(), stages.end(), s) != stages.end();
}

namespace {

threat::FeatureScope make_scope(std::vector<std::string> full, std::vector<std::string> conscious,
                                std::vector<std::string> affected) {
  threat::FeatureScope s;
  s.known = full;
  s.full = std::move(full);
  s.conscious = std::move(conscious);
  s.affected = std::move(affected);
  return s;
}

std::vector<std::string> ue_names() {
  std::vector<std::string> out;
  for (int i = 1; i <= 20; ++i) out.push_back("UE" + std::to_string(i));
  return out;
}

}  // namespace

std::vector<std::pair<std::string, threat::FeatureScope>> scenario_scopes(int scenario) {
  switch (scenario) {
    case 1:
      return {{"padding", make_scope(flow::kFeatureNames, {"SrcBytes", "TotBytes"},
                                     {"Dur", "SrcBytes", "DstBytes", "TotBytes", "TotPkts"})}};
    case 2:
      return {{"RSRP", make_scope(kCqiFeatures, {"RSRP"}, {"RSRP", "RSRQ"})},
              {"pktRxByt", make_scope(kCqiFeatures, {"pktRxByt"}, {"pktRxByt"})},
              {"pktRx", make_scope(kCqiFeatures, {"pktRx"}, {"pktRx", "pktRxAiat"})},
              {"pktRx+pktRxByt",
               make_scope(kCqiFeatures, {"pktRx", "pktRxByt"}, {"pktRx", "pktRxByt", "pktRxAiat"})}};
    case 3:
      return {{"CQI", make_scope({"CQI"}, {"CQI"}, {"CQI"})}};
    case 4: {
      const auto s = iq_schema();
      return {{"random25", make_scope(s, s, s)},
              {"random50", make_scope(s, s, s)},
              {"random100", make_scope(s, s, s)},
              {"top25", make_scope(s, s, s)}};
    }
    case 5:
      return {{"single", make_scope(ue_names(), {"UE5"}, {"UE5"})},
              {"multi", make_scope(ue_names(), {"UE5", "UE15"}, {"UE5", "UE15"})}};
    case 6:
      return {{"Day+Hour", make_scope(kSliceFeatures, {"Day", "Hour"}, {"Day", "Hour"})},
              {"PDB", make_scope(kSliceFeatures, {"PacketDelayBudget"}, {"PacketDelayBudget"})},
              {"PLR", make_scope(kSliceFeatures, {"PacketLossRate"}, {"PacketLossRate"})},
              {"PDB+PLR", make_scope(kSliceFeatures, {"PacketDelayBudget", "PacketLossRate"},
                                     {"PacketDelayBudget", "PacketLossRate"})}};
  }
  throw std::invalid_argument("unknown scenario " + std::to_string(scenario));
}

models::ModelSpec default_model(int scenario, std::uint64_t seed) {
  models::ModelSpec m;
  m.seed = seed;
  switch (scenario) {
    case 1:
    case 4:
      m.kind = models::Kind::forest;
      m.task = models::TaskKind::classify;
      return m;
    case 2:
      m.kind = models::Kind::forest;
      m.task = models::TaskKind::regress;
      return m;
    case 3:
      m.kind = models::Kind::recurrent;
      m.task = models::TaskKind::regress;
      return m;
    case 5:
      m.kind = models::Kind::feedforward;
      m.task = models::TaskKind::vector_regress;
      m.feedforward.hidden = {32};
      m.feedforward.activation = models::Activation::tanh;
      m.feedforward.output = models::OutputActivation::grouped_softmax;
      m.feedforward.output_group = 5;
      m.feedforward.epochs = 60;
      m.feedforward.learning_rate = 5e-3;
      return m;
    case 6:
      m.kind = models::Kind::feedforward;
      m.task = models::TaskKind::classify;
      m.feedforward.hidden = {32};
      m.feedforward.epochs = 40;
      m.feedforward.l2 = 1e-4;
      return m;
  }
  throw std::invalid_argument("unknown scenario " + std::to_string(scenario));
}

namespace detail {

void check_scope_schema(const threat::FeatureScope& scope, const std::vector<std::string>& schema) {
  std::vector<std::string> unknown;
  for (const auto* set : {&scope.full, &scope.known, &scope.conscious, &scope.affected})
    for (const auto& f : *set)
      if (std::find(schema.begin(), schema.end(), f) == schema.end() &&
          std::find(unknown.begin(), unknown.end(), f) == unknown.end())
        unknown.push_back(f);
  if (!unknown.empty()) {
    std::string msg = "scope names features outside the scenario schema:";
    for (const auto& f : unknown) msg += " " + f;
    throw std::invalid_argument(msg);
  }
}

void record_defense(report::ExperimentReport& rep, const std::string& scenario, const std::string& scope,
                    const std::string& defense, const defense::DefenseEvaluation& ev, const std::string& figure) {
  rep.tradeoffs.push_back({scenario, scope, defense, ev.tradeoff});
  auto c = ev.residual;
  c.scenario = scenario;
  c.stage = attack::stage_name(attack::Stage::inference);
  c.scope = scope;
  c.defense = defense;
  rep.add_curve(std::move(c), figure, scope + ":" + defense);
}

}  // namespace detail

report::ExperimentReport run_case_study(const CaseConfig& cfg, std::uint64_t seed) {
  if (cfg.scenario < 1 || cfg.scenario > 6) throw std::invalid_argument("unknown scenario " + std::to_string(cfg.scenario));
  for (const auto& s : cfg.stages) attack::stage_from_name(s);
  if (!(cfg.aug_fraction > 0.0 && cfg.aug_fraction < 1.0))
    throw std::invalid_argument("aug_fraction must lie in (0,1)");
  if (cfg.scope) {
    const auto violations = threat::validate_scope(*cfg.scope);
    if (!violations.empty()) {
      std::ostringstream msg;
      msg << "invalid feature scope:";
      for (const auto& v : violations) {
        msg << " [" << v.relation << ":";
        for (const auto& f : v.offending) msg << ' ' << f;
        msg << ']';
      }
      throw std::invalid_argument(msg.str());
    }
  }
  if (cfg.model) cfg.model->validate();
  for (const auto& [name, scope] : scenario_scopes(cfg.scenario))
    if (!threat::validate_scope(scope).empty()) throw std::logic_error("built-in scope " + name + " is invalid");

  detail::Stopwatch sw;
  report::ExperimentReport rep;
  switch (cfg.scenario) {
    case 1: rep = run_cs1(cfg, seed); break;
    case 2: rep = run_cs2(cfg, seed); break;
    case 3: rep = run_cs3(cfg, seed); break;
    case 4: rep = run_cs4(cfg, seed); break;
    case 5: rep = run_cs5(cfg, seed); break;
    case 6: rep = run_cs6(cfg, seed); break;
  }
  rep.timings.emplace_back(detail::scenario_tag(cfg.scenario) + "/total", sw.seconds());
  return rep;
}

}  // namespace myopic::scenarios
