#include "myopic/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace myopic::config {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

void unknown_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where,
                  std::vector<std::string>& errors) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) errors.push_back(where + ": unknown key '" + k + "'");
}

/// Reads `key` into `out`, recording a type error instead of throwing.
template <typename T>
void read(const Json& obj, const std::string& key, T& out, const std::string& where, std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const std::exception&) {
    errors.push_back(where + key + ": wrong type");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations)), violations_(std::move(violations)) {}

Json ExperimentConfig::to_json() const {
  Json j;
  j["scenarios"] = scenarios;
  j["seed"] = seed;
  j["output"] = output;
  j["jobs"] = jobs;
  j["stages"] = stages;
  j["defenses"] = defenses;
  j["data"] = {{"size", size}, {"path", data_path}};
  if (model) j["model"] = models::spec_to_json(*model);
  if (scope)
    j["scope"] = {{"full", scope->full}, {"known", scope->known}, {"conscious", scope->conscious},
                  {"affected", scope->affected}};
  j["perturbation"] = {
      {"multipliers", multipliers}, {"ratios", ratios}, {"trials", trials}, {"aug_fraction", aug_fraction}};
  return j;
}

std::string ExperimentConfig::fingerprint() const {
  // The output directory does not change results.
  auto j = to_json();
  j.erase("output");
  j.erase("jobs");
  return hex64(fnv1a(j.dump()));
}

scenarios::CaseConfig ExperimentConfig::case_config(int scenario) const {
  scenarios::CaseConfig c;
  c.scenario = scenario;
  c.size = size;
  c.data_path = data_path;
  c.model = model;
  c.multipliers = multipliers;
  c.ratios = ratios;
  c.trials = trials;
  c.defenses = defenses;
  c.stages = stages;
  c.aug_fraction = aug_fraction;
  c.scope = scope;
  return c;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  if (scenarios.empty()) errors.push_back("scenarios: at least one scenario is required");
  for (int s : scenarios)
    if (s < 1 || s > 6) errors.push_back("scenarios: unknown scenario " + std::to_string(s));
  if (jobs < 0) errors.push_back("jobs: must be >= 0");
  for (const auto& s : stages)
    if (s != "inference" && s != "training" && s != "online") errors.push_back("stages: unknown stage '" + s + "'");
  for (const auto& d : defenses)
    if (d != "none" && std::find(kDefenseNames.begin(), kDefenseNames.end(), d) == kDefenseNames.end())
      errors.push_back("defenses: unknown defense '" + d + "'");
  if (multipliers.empty()) errors.push_back("perturbation.multipliers: empty");
  for (std::size_t i = 1; i < multipliers.size(); ++i)
    if (!(multipliers[i] > multipliers[i - 1])) {
      errors.push_back("perturbation.multipliers: must be strictly increasing");
      break;
    }
  for (double r : ratios)
    if (r < 0.0 || r > 1.0) errors.push_back("perturbation.ratios: " + std::to_string(r) + " outside [0,1]");
  if (trials < 0) errors.push_back("perturbation.trials: must be >= 0");
  if (!(aug_fraction > 0.0 && aug_fraction < 1.0)) errors.push_back("perturbation.aug_fraction: must lie in (0,1)");
  if (scope) {
    for (const auto& v : threat::validate_scope(*scope)) {
      std::string msg = "scope: " + v.relation + " (";
      for (std::size_t i = 0; i < v.offending.size(); ++i) msg += (i ? ", " : "") + v.offending[i];
      errors.push_back(msg + ")");
    }
    for (int s : scenarios) {
      if (s < 1 || s > 6) continue;
      const auto schema = scenarios::scenario_scopes(s).front().second.full;
      for (const auto& f : scope->full)
        if (std::find(schema.begin(), schema.end(), f) == schema.end())
          errors.push_back("scope: feature '" + f + "' is not in the schema of scenario " + std::to_string(s));
    }
  }
  if (model) {
    try {
      model->validate();
    } catch (const std::exception& e) {
      errors.push_back(std::string("model: ") + e.what());
    }
    for (int s : scenarios) {
      if (s == 3 && model->kind != models::Kind::recurrent)
        errors.push_back("model: scenario 3 needs a recurrent model");
      if (s != 3 && model->kind == models::Kind::recurrent)
        errors.push_back("model: scenario " + std::to_string(s) + " cannot use a recurrent model");
      if (s == 5 && model->task != models::TaskKind::vector_regress)
        errors.push_back("model: scenario 5 needs task vector_regress");
      if ((s == 1 || s == 4 || s == 6) && model->task != models::TaskKind::classify)
        errors.push_back("model: scenario " + std::to_string(s) + " needs task classify");
      if (s == 2 && model->task != models::TaskKind::regress) errors.push_back("model: scenario 2 needs task regress");
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
}

ExperimentConfig parse_config(const Json& j) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  unknown_keys(j,
               {"scenarios", "seed", "output", "jobs", "stages", "defenses", "data", "model", "scope", "perturbation"},
               "config", errors);
  read(j, "scenarios", c.scenarios, "", errors);
  read(j, "seed", c.seed, "", errors);
  read(j, "output", c.output, "", errors);
  read(j, "jobs", c.jobs, "", errors);
  read(j, "stages", c.stages, "", errors);
  read(j, "defenses", c.defenses, "", errors);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (!d.is_object()) {
      errors.push_back("data: must be an object");
    } else {
      unknown_keys(d, {"size", "path"}, "data", errors);
      read(d, "size", c.size, "data.", errors);
      read(d, "path", c.data_path, "data.", errors);
    }
  }
  if (j.contains("model")) {
    try {
      c.model = models::spec_from_json(j.at("model"));
    } catch (const std::exception& e) {
      errors.push_back(std::string("model: ") + e.what());
    }
  }
  if (j.contains("scope")) {
    const auto& s = j.at("scope");
    if (!s.is_object()) {
      errors.push_back("scope: must be an object");
    } else {
      unknown_keys(s, {"full", "known", "conscious", "affected"}, "scope", errors);
      threat::FeatureScope fs;
      read(s, "full", fs.full, "scope.", errors);
      read(s, "known", fs.known, "scope.", errors);
      read(s, "conscious", fs.conscious, "scope.", errors);
      read(s, "affected", fs.affected, "scope.", errors);
      c.scope = fs;
    }
  }
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    if (!p.is_object()) {
      errors.push_back("perturbation: must be an object");
    } else {
      unknown_keys(p, {"multipliers", "ratios", "trials", "aug_fraction"}, "perturbation", errors);
      read(p, "multipliers", c.multipliers, "perturbation.", errors);
      read(p, "ratios", c.ratios, "perturbation.", errors);
      read(p, "trials", c.trials, "perturbation.", errors);
      read(p, "aug_fraction", c.aug_fraction, "perturbation.", errors);
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.violations().begin(), e.violations().end());
  }
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  return parse_config(j);
}

}  // namespace myopic::config
