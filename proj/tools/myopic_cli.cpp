// Command-line front end: generate | train | attack | defend | report | all.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "myopic/config.hpp"
#include "myopic/report.hpp"
#include "myopic/scenarios.hpp"

namespace fs = std::filesystem;
using namespace myopic;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<int> scenarios;
  std::vector<std::string> stages;
  std::optional<int> jobs;
};

config::ExperimentConfig resolve(const Options& o) {
  config::ExperimentConfig c;
  if (!o.config.empty()) {
    c = config::load_config(o.config);
  } else if (o.scenarios.empty()) {
    throw config::ConfigError({"either --config or --scenario is required"});
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output = o.out;
  if (!o.scenarios.empty()) c.scenarios = o.scenarios;
  if (!o.stages.empty()) c.stages = o.stages;
  if (o.jobs) c.jobs = *o.jobs;
  c.validate();
  return c;
}

void write_report(const report::ExperimentReport& rep, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& fp = rep.fingerprint;
  report::write_artifact((dir / "metrics.csv").string(), rep.metrics_delimited(), fp);
  report::write_artifact((dir / "curves.csv").string(), rep.curves_delimited(), fp);
  report::write_artifact((dir / "tradeoffs.csv").string(), rep.tradeoffs_delimited(), fp);
  std::string refs = "scenario,name,value\n";
  for (const auto& r : rep.references) {
    std::ostringstream v;
    v << r.value;
    refs += r.scenario + "," + r.name + "," + v.str() + "\n";
  }
  report::write_artifact((dir / "references.csv").string(), refs, fp);
  for (const auto& [fig, content] : report::emit_plot_data(rep))
    report::write_artifact((dir / (fig + ".csv")).string(), content, fp);
  report::write_artifact((dir / "report.json").string(), rep.to_json().dump(2) + "\n", fp);
}

/// Runs every configured scenario and writes the merged report.
int run_experiment(const config::ExperimentConfig& c, bool baseline_only, bool attacks_only) {
  report::ExperimentReport all;
  all.fingerprint = c.fingerprint();
  for (int s : c.scenarios) {
    auto cc = c.case_config(s);
    cc.baseline_only = baseline_only;
    if (attacks_only) cc.defenses = {"none"};
    std::cerr << "[myopic] running cs" << s << " (fingerprint " << all.fingerprint << ")\n";
    all.append(scenarios::run_case_study(cc, c.seed));
  }
  write_report(all, c.output);
  std::cerr << "[myopic] wrote " << c.output << "\n";
  return 0;
}

int generate(const config::ExperimentConfig& c) {
  fs::create_directories(c.output);
  for (int s : c.scenarios) {
    const auto data = scenarios::generate_scenario_data(s, c.size, c.seed);
    const auto path = fs::path(c.output) / ("cs" + std::to_string(s) + "_data.csv");
    report::write_artifact(path.string(), scenarios::export_dataset(data), c.fingerprint());
    std::cerr << "[myopic] wrote " << path.string() << "\n";
  }
  return 0;
}

int emit_report(const config::ExperimentConfig& c) {
  const auto path = fs::path(c.output) / "report.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("no report at " + path.string() + "; run 'attack', 'defend' or 'all' first");
  std::string line;
  std::getline(in, line);  // fingerprint header
  const auto rep = report::report_from_json(Json::parse(in));
  if (rep.fingerprint != c.fingerprint())
    throw std::runtime_error("report in " + c.output + " was produced by a different configuration");
  write_report(rep, c.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Myopic adversarial-attack evaluation for ML components of mobile networks"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  int jobs = 0;
  app.add_option("--config", o.config, "Experiment config (JSON)")->envname("MYOPIC_CONFIG");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed")->envname("MYOPIC_SEED");
  app.add_option("--out", o.out, "Output directory")->envname("MYOPIC_OUT");
  app.add_option("--scenario", o.scenarios, "Case study id(s) 1-6")->envname("MYOPIC_SCENARIO")->delimiter(',');
  app.add_option("--stage", o.stages, "Attack stage(s): inference, training, online")
      ->envname("MYOPIC_STAGE")
      ->delimiter(',');
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads (0 = all cores)")->envname("MYOPIC_JOBS");

  auto* generate_cmd = app.add_subcommand("generate", "Write synthetic datasets in the ingest format");
  auto* train_cmd = app.add_subcommand("train", "Train and score the baseline models");
  auto* attack_cmd = app.add_subcommand("attack", "Baseline plus attack sweeps, no defenses");
  auto* defend_cmd = app.add_subcommand("defend", "Attack sweeps with the configured defenses");
  auto* report_cmd = app.add_subcommand("report", "Re-emit figure data from a stored report");
  auto* all_cmd = app.add_subcommand("all", "Generate, train, attack, defend and report");
  for (auto* sub : {generate_cmd, train_cmd, attack_cmd, defend_cmd, report_cmd, all_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  if (seed_opt->count() > 0) o.seed = seed;
  if (jobs_opt->count() > 0) o.jobs = jobs;

  config::ExperimentConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const config::ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "config error: " << v << "\n";
    return kExitConfig;
  }
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);

  try {
    if (*generate_cmd) return generate(cfg);
    if (*train_cmd) return run_experiment(cfg, true, false);
    if (*attack_cmd) return run_experiment(cfg, false, true);
    if (*defend_cmd) return run_experiment(cfg, false, false);
    if (*report_cmd) return emit_report(cfg);
    if (*all_cmd) {
      generate(cfg);
      return run_experiment(cfg, false, false);
    }
  } catch (const config::ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "config error: " << v << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
