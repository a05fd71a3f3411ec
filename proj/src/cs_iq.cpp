// CS4: modulation recognition, random vs most-important I/Q positions.

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "case_common.hpp"

namespace myopic::scenarios {

std::vector<std::string> random_iq_positions(std::size_t k, std::uint64_t seed) {
  const auto schema = iq_schema();
  if (k == 0 || k > schema.size()) throw std::invalid_argument("random_iq_positions: k out of range");
  auto order = permutation(schema.size(), seed);
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  for (auto i : order) out.push_back(schema[i]);
  return out;
}

Matrix iq_position_attack(const models::Model& model, const Matrix& v, const std::vector<int>& labels,
                          const std::vector<std::vector<std::string>>& position_sets,
                          const std::vector<double>& multipliers, const std::map<std::string, double>& std_reference,
                          double clamp, Exec exec) {
  if (labels.size() != v.rows()) throw std::invalid_argument("iq_position_attack: label count mismatch");
  const auto table = rsp::RawTable::from_matrix(iq_schema(), v);
  Matrix acc(position_sets.size(), multipliers.size());
  for (std::size_t s = 0; s < position_sets.size(); ++s) {
    rsp::PerturbationSpec spec;
    spec.target_fields = position_sets[s];
    spec.mode = rsp::Mode::additive_std;
    spec.intensity_levels = multipliers;
    spec.std_reference = std_reference;
    for (const auto& f : position_sets[s])
      spec.constraints.push_back({f, rsp::Interval{-clamp, clamp}, rsp::ViolationAction::clamp});
    for (std::size_t l = 0; l < multipliers.size(); ++l) {
      const auto res = rsp::apply_rsp(table, spec, l, 0, exec);
      const auto p = model.predict(res.records.values, exec);
      std::vector<int> truth;
      for (auto id : res.records.ids) truth.push_back(labels[id]);
      acc(s, l) = threat::accuracy(truth, p.labels);
    }
  }
  return acc;
}

models::ModelSpec iq_network_spec(std::uint64_t seed) {
  models::ModelSpec m;
  m.kind = models::Kind::feedforward;
  m.task = models::TaskKind::classify;
  m.feedforward.hidden = {64, 32};
  m.feedforward.epochs = 40;
  m.feedforward.learning_rate = 2e-3;
  m.feedforward.l2 = 1e-4;
  m.seed = seed;
  return m;
}

report::ExperimentReport run_cs4(const CaseConfig& cfg, std::uint64_t seed) {
  report::ExperimentReport rep;
  const std::string sc = "cs4";
  IqDataset data;
  if (!cfg.data_path.empty()) {
    IngestLog log;
    data = std::get<IqDataset>(ingest_real_dataset(4, cfg.data_path, log));
    rep.provenance.push_back("cs4 ingest: " + cfg.data_path + ", rows " + std::to_string(log.rows) + ", skipped " +
                             std::to_string(log.skipped));
    for (const auto& m : log.messages) rep.provenance.push_back("cs4 ingest: " + m);
  } else {
    data = std::get<IqDataset>(generate_scenario_data(4, cfg.size, seed));
  }
  rep.provenance.push_back("cs4 source: " + data.source + ", signals " + std::to_string(data.x.rows()));
  rep.references.push_back({sc, "baseline.Acc_forest", 0.82});
  rep.references.push_back({sc, "baseline.Acc_network", 0.72});
  if (cfg.scope) detail::check_scope_schema(*cfg.scope, data.schema);

  const auto split = split_indices(data.x.rows(), 0.5, derive_seed(seed, "cs4/split"));
  const Matrix xt = data.x.select_rows(split.train), xv = data.x.select_rows(split.validation);
  std::vector<int> yt, yv;
  for (auto i : split.train) yt.push_back(data.labels[i]);
  for (auto i : split.validation) yv.push_back(data.labels[i]);

  detail::Stopwatch sw;
  const auto forest = models::Model::train(detail::model_or(cfg, derive_seed(seed, "cs4/model")), xt,
                                           models::labels_to_targets(yt), data.schema, cfg.exec);
  const auto network = models::Model::train(iq_network_spec(derive_seed(seed, "cs4/network")), xt,
                                            models::labels_to_targets(yt), data.schema, cfg.exec);
  rep.timings.emplace_back("cs4/train", sw.seconds());
  rep.add_metric(sc, "baseline.Acc_forest", threat::accuracy(yv, forest.predict(xv, cfg.exec).labels));
  rep.add_metric(sc, "baseline.Acc_network", threat::accuracy(yv, network.predict(xv, cfg.exec).labels));
  if (!cfg.stage_enabled("inference")) return rep;

  const auto importance = forest.feature_importance();
  const auto top = importance.top_k(25);
  std::string top_list;
  for (const auto& f : top) top_list += (top_list.empty() ? "" : " ") + f;
  rep.provenance.push_back("cs4 top-25 positions: " + top_list);

  const int trials = detail::trials_or(cfg, 20);
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> scopes;
  if (cfg.scope) {
    scopes.push_back({"custom", {cfg.scope->conscious}});
  } else {
    for (std::size_t k : {25, 50, 100}) {
      std::vector<std::vector<std::string>> sets;
      const std::string name = "random" + std::to_string(k);
      for (int t = 0; t < trials; ++t)
        sets.push_back(random_iq_positions(k, derive_seed(seed, "cs4/positions/" + name, static_cast<std::uint64_t>(t))));
      scopes.push_back({name, sets});
    }
    scopes.push_back({"top25", {top}});
  }

  const auto stds = detail::column_std(xt, data.schema);
  std::map<std::string, std::vector<attack::CurvePoint>> forest_curves;
  for (const auto& [label, model] : {std::pair<std::string, const models::Model*>{"forest", &forest},
                                     std::pair<std::string, const models::Model*>{"network", &network}}) {
    sw = {};
    for (const auto& [name, sets] : scopes) {
      const auto acc = iq_position_attack(*model, xv, yv, sets, cfg.multipliers, stds, 10.0, cfg.exec);
      attack::DegradationCurve c;
      c.scenario = sc;
      c.stage = attack::stage_name(attack::Stage::inference);
      c.scope = name;
      c.metric = "Acc_" + label;
      for (std::size_t l = 0; l < cfg.multipliers.size(); ++l)
        c.points.push_back(attack::summarize(cfg.multipliers[l], column(acc, l)));
      if (label == "forest") forest_curves[name] = c.points;
      rep.add_metric(sc, "attack." + name + "." + c.metric + "_at_max", c.points.back().mean);
      rep.add_curve(std::move(c), "fig8a", label + ":" + name);
    }
    rep.timings.emplace_back("cs4/attack/" + label, sw.seconds());
  }

  if (forest_curves.count("top25") && forest_curves.count("random25")) {
    const auto& a = forest_curves["top25"];
    const auto& b = forest_curves["random25"];
    double held = 0, checked = 0;
    for (std::size_t l = 2; l < a.size(); ++l) {
      checked += 1;
      held += a[l].mean <= b[l].mean ? 1 : 0;
    }
    rep.add_metric(sc, "top25_at_least_random25_points", held);
    rep.add_metric(sc, "top25_vs_random25_points_checked", checked);
  }
  return rep;
}

}  // namespace myopic::scenarios
