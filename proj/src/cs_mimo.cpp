// CS5: learned downlink power allocation fed with spoofed UE positions.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "case_common.hpp"

namespace myopic::scenarios {

namespace {

constexpr int kSteps = 8;
constexpr double kMaxOffset = 300.0;

std::vector<double> allocate(const models::Model& model, const mimo::MimoTopology& topo,
                             std::span<const mimo::Point> positions) {
  const auto f = mimo::distance_features(topo, positions);
  Matrix x(1, f.size());
  std::copy(f.begin(), f.end(), x.row(0).begin());
  const auto p = model.predict(x, Exec::serial);
  std::vector<double> out(p.vectors.row(0).begin(), p.vectors.row(0).end());
  for (auto& v : out) v *= topo.budget;
  return mimo::normalize_powers(topo, out);
}

}  // namespace

report::ExperimentReport run_cs5(const CaseConfig& cfg, std::uint64_t seed) {
  report::ExperimentReport rep;
  const std::string sc = "cs5";
  PowerDataset data;
  if (!cfg.data_path.empty()) {
    IngestLog log;
    data = std::get<PowerDataset>(ingest_real_dataset(5, cfg.data_path, log));
    rep.provenance.push_back("cs5 ingest: " + cfg.data_path + ", rows " + std::to_string(log.rows) + ", skipped " +
                             std::to_string(log.skipped));
    for (const auto& m : log.messages) rep.provenance.push_back("cs5 ingest: " + m);
  } else {
    data = std::get<PowerDataset>(generate_scenario_data(5, cfg.size, seed));
  }
  const auto& topo = data.topology;
  topo.validate();
  rep.provenance.push_back("cs5 source: " + data.source + ", layouts " + std::to_string(data.x.rows()));
  rep.references.push_back({sc, "single.attacker_se_change_pct", 3.0});
  rep.references.push_back({sc, "single.victim_se_loss_pct_low", 3.0});
  rep.references.push_back({sc, "single.victim_se_loss_pct_high", 20.0});
  rep.references.push_back({sc, "whitebox.se_decrease_pct", 60.0});
  rep.references.push_back({sc, "blackbox.se_decrease_pct", 20.0});

  const auto split = split_indices(data.x.rows(), 0.9, derive_seed(seed, "cs5/split"));
  detail::Stopwatch sw;
  const auto model = models::Model::train(detail::model_or(cfg, derive_seed(seed, "cs5/model")),
                                          data.x.select_rows(split.train), data.shares.select_rows(split.train), {},
                                          cfg.exec);
  rep.timings.emplace_back("cs5/train", sw.seconds());
  {
    const auto pv = model.predict(data.x.select_rows(split.validation), cfg.exec);
    const auto truth = data.shares.select_rows(split.validation);
    rep.add_metric(sc, "baseline.share_RMSE", threat::rmse(truth.data(), pv.vectors.data()));
  }
  if (!cfg.stage_enabled("inference")) return rep;

  std::vector<std::pair<std::string, std::vector<std::size_t>>> scopes{{"single", {4}}, {"multi", {4, 14}}};
  if (cfg.scope) {
    detail::check_scope_schema(*cfg.scope, scenario_scopes(5).front().second.full);
    std::vector<std::size_t> custom;
    for (const auto& f : cfg.scope->conscious) custom.push_back(std::stoul(f.substr(2)) - 1);
    scopes = {{"custom", custom}};
  }

  const auto truth_se = mimo::spectral_efficiency(topo, mimo::ground_truth_power(topo, topo.ues), topo.ues);
  for (const auto& [name, attackers] : scopes) {
    const auto positions = attack::spoof_positions(topo, attackers, kSteps, kMaxOffset);
    std::vector<std::vector<double>> se, power;
    double excess = 0.0;
    for (const auto& pos : positions) {
      const auto p = allocate(model, topo, pos);
      for (std::size_t g = 0; g < topo.gnbs.size(); ++g)
        excess = std::max(excess, mimo::gnb_power(topo, p, static_cast<int>(g)) - topo.budget);
      se.push_back(mimo::spectral_efficiency(topo, p, topo.ues));
      power.push_back(p);
    }

    std::vector<int> cells;
    for (auto a : attackers) cells.push_back(topo.serving[a]);
    int nondecreasing = 1, strict_steps = 0, victims_down = 0;
    double min_victim = 0.0;
    for (auto a : attackers)
      for (int s = 1; s <= kSteps; ++s) {
        if (power[s][a] < power[s - 1][a]) nondecreasing = 0;
        if (power[s][a] > power[s - 1][a]) ++strict_steps;
      }
    for (std::size_t k = 0; k < topo.size(); ++k) {
      const bool in_cell = std::find(cells.begin(), cells.end(), topo.serving[k]) != cells.end();
      const bool is_attacker = std::find(attackers.begin(), attackers.end(), k) != attackers.end();
      if (!in_cell) continue;
      attack::DegradationCurve c;
      c.scenario = sc;
      c.stage = attack::stage_name(attack::Stage::inference);
      c.scope = name;
      c.metric = "SE_change_pct:UE" + std::to_string(k + 1);
      for (int s = 0; s <= kSteps; ++s)
        c.points.push_back({kMaxOffset * s / kSteps, 100.0 * (se[s][k] - se[0][k]) / se[0][k], 0.0, 1});
      const double final_change = c.points.back().mean;
      if (is_attacker) {
        rep.add_metric(sc, name + ".attacker.UE" + std::to_string(k + 1) + ".se_change_pct", final_change);
      } else {
        if (se[kSteps][k] < se[0][k]) ++victims_down;
        min_victim = std::min(min_victim, final_change);
      }
      rep.add_curve(std::move(c), "fig9", name + ":UE" + std::to_string(k + 1));
    }
    for (auto a : attackers) {
      rep.add_metric(sc, name + ".attacker.UE" + std::to_string(a + 1) + ".power_start", power.front()[a]);
      rep.add_metric(sc, name + ".attacker.UE" + std::to_string(a + 1) + ".power_end", power.back()[a]);
    }
    double drift = 0.0;
    for (std::size_t k = 0; k < topo.size(); ++k) drift = std::max(drift, std::abs(se[0][k] - truth_se[k]) / truth_se[k]);
    rep.add_metric(sc, name + ".attacker_power_nondecreasing", nondecreasing);
    rep.add_metric(sc, name + ".attacker_power_strict_steps", strict_steps);
    rep.add_metric(sc, name + ".victims_se_decreased", victims_down);
    rep.add_metric(sc, name + ".min_victim_se_change_pct", min_victim);
    rep.add_metric(sc, name + ".max_budget_excess", std::max(excess, 0.0));
    rep.add_metric(sc, name + ".clean_se_rel_gap_to_oracle", drift);
  }
  return rep;
}

}  // namespace myopic::scenarios
