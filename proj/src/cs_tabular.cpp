// CS2 (CQI regression) and CS6 (slice classification): tabular data,
// inference-stage RsP per scope, adversarial training and feature removal.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "case_common.hpp"

namespace myopic::scenarios {

namespace {

using detail::Twins;

struct NamedSpec {
  std::string name;
  threat::FeatureScope scope;
  rsp::PerturbationSpec spec;
  std::vector<double> xs;  // plotted x per intensity level
};

struct TabularCase {
  int id = 0;
  rsp::RawTable table;
  std::vector<double> truth;
  std::string source;
  bool classification = true;
  double train_fraction = 0.9;
  std::string figure;          // primary metric curves
  std::string rmse_figure;     // regression only
};

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// The spec must change exactly the scope's affected set.
void check_spec_scope(const NamedSpec& s) {
  if (sorted(s.spec.affected_fields()) != sorted(s.scope.affected))
    throw std::logic_error("scope " + s.name + ": perturbation closure differs from the affected set");
}

NamedSpec custom_spec(const threat::FeatureScope& scope, const Matrix& t, const std::vector<std::string>& schema,
                      const std::vector<double>& multipliers) {
  NamedSpec s;
  s.name = "custom";
  s.scope = scope;
  s.spec.target_fields = scope.conscious;
  s.spec.mode = rsp::Mode::additive_std;
  s.spec.intensity_levels = multipliers;
  s.spec.std_reference = detail::column_std(t, schema);
  s.xs = multipliers;
  return s;
}

/// Metric on both sides of every twin set, plus the tradeoff on the full V.
defense::DefenseEvaluation evaluate_twins(const defense::Hardened& base, const defense::Hardened& hard,
                                          const attack::EvalSet& v, const std::vector<double>& xs,
                                          const std::vector<Twins>& twins, const attack::MetricOptions& opt,
                                          Exec exec) {
  auto ev = defense::evaluate_defense(base, hard, v, {}, opt, exec);
  for (std::size_t l = 0; l < twins.size(); ++l) {
    const auto p = defense::evaluate_defense(base, hard, twins[l].clean, {{xs[l], twins[l].adversarial}}, opt, exec);
    ev.baseline_curve.points.push_back(p.baseline_curve.points.front());
    ev.residual.points.push_back(p.residual.points.front());
    ev.residual_degradation.push_back(p.residual_degradation.front());
  }
  return ev;
}

report::ExperimentReport run_tabular(const CaseConfig& cfg, const TabularCase& tc, std::vector<NamedSpec> specs,
                                     std::uint64_t seed, report::ExperimentReport rep,
                                     const std::function<void(const models::Model&, const rsp::RawTable&, const std::vector<double>&,
                                                              report::ExperimentReport&)>& extra = {}) {
  const std::string sc = detail::scenario_tag(tc.id);
  const auto& schema = tc.table.columns;
  rep.provenance.push_back(sc + " source: " + tc.source + ", rows " + std::to_string(tc.table.size()));

  const auto split = split_indices(tc.table.size(), tc.train_fraction, derive_seed(seed, sc + "/split"));
  const Matrix xt = tc.table.values.select_rows(split.train);
  std::vector<double> yt, yv;
  for (auto i : split.train) yt.push_back(tc.truth[i]);
  for (auto i : split.validation) yv.push_back(tc.truth[i]);
  const auto v = rsp::RawTable::from_matrix(schema, tc.table.values.select_rows(split.validation));
  const attack::EvalSet vset{v.values, yv, {}};

  const auto mspec = detail::model_or(cfg, derive_seed(seed, sc + "/model"));
  const defense::Trainer trainer = [&](const Matrix& x, const Matrix& y, const std::vector<std::string>& names) {
    return models::Model::train(mspec, x, y, names, cfg.exec);
  };
  const Matrix targets = models::values_to_targets(yt);
  detail::Stopwatch sw;
  const auto base = defense::as_hardened("none", trainer(xt, targets, schema));
  rep.timings.emplace_back(sc + "/train", sw.seconds());

  attack::MetricOptions acc;
  acc.metric = threat::Metric::accuracy;
  acc.rounded = !tc.classification;
  attack::MetricOptions err;
  err.metric = threat::Metric::rmse;

  const auto pv = base.model.predict(v.values, cfg.exec);
  rep.add_metric(sc, "baseline.Acc", attack::evaluate_metric(pv, yv, acc));
  if (!tc.classification) rep.add_metric(sc, "baseline.RMSE", attack::evaluate_metric(pv, yv, err));
  rep.add_metric(sc, "train.rows", static_cast<double>(xt.rows()));
  rep.add_metric(sc, "validation.rows", static_cast<double>(v.size()));

  if (extra) extra(base.model, v, yv, rep);
  if (!cfg.stage_enabled("inference")) return rep;

  if (cfg.scope) {
    detail::check_scope_schema(*cfg.scope, schema);
    specs = {custom_spec(*cfg.scope, xt, schema, cfg.multipliers)};
  }
  const defense::Dataset tset{schema, xt, targets};
  std::vector<defense::Hardened> hardened_list;
  std::vector<attack::EvalSet> strongest;
  std::vector<std::string> attack_names;
  bool aligned = true;

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto& ns = specs[s];
    check_spec_scope(ns);
    sw = {};
    std::vector<Twins> twins;
    std::size_t rejected = 0;
    for (std::size_t l = 0; l < ns.spec.intensity_levels.size(); ++l) {
      twins.push_back(detail::rsp_twins(v, yv, ns.spec, l, derive_seed(seed, sc + "/rsp/" + ns.name, l), cfg.exec));
      rejected += twins.back().rejected;
    }
    rep.add_metric(sc, "attack." + ns.name + ".rejected", static_cast<double>(rejected));
    if (twins.back().clean.x.rows() != v.size()) aligned = false;
    strongest.push_back(twins.back().adversarial);
    attack_names.push_back(ns.name);

    // Baseline under attack.
    attack::DegradationCurve c_acc, c_rmse;
    c_acc.scenario = c_rmse.scenario = sc;
    c_acc.stage = c_rmse.stage = attack::stage_name(attack::Stage::inference);
    c_acc.scope = c_rmse.scope = ns.name;
    c_acc.metric = threat::metric_name(acc.metric);
    c_rmse.metric = threat::metric_name(err.metric);
    std::size_t successes = 0, examples = 0;
    for (std::size_t l = 0; l < twins.size(); ++l) {
      const auto r = attack::run_inference_attack(base.model, twins[l].clean, twins[l].adversarial, acc, false, cfg.exec);
      c_acc.points.push_back({ns.xs[l], r.aggregate.adversarial, 0.0, 1});
      successes += r.aggregate.successes;
      examples += r.aggregate.rows;
      if (!tc.classification) {
        const auto e = attack::run_inference_attack(base.model, twins[l].clean, twins[l].adversarial, err, false,
                                                    cfg.exec);
        c_rmse.points.push_back({ns.xs[l], e.aggregate.adversarial, 0.0, 1});
      }
    }
    rep.add_metric(sc, "attack." + ns.name + ".successes", static_cast<double>(successes));
    rep.add_metric(sc, "attack." + ns.name + ".examples", static_cast<double>(examples));
    rep.add_metric(sc, "attack." + ns.name + ".Acc_at_max", c_acc.points.back().mean);
    rep.add_curve(c_acc, tc.figure, ns.name + ":none");
    if (!tc.classification) rep.add_curve(c_rmse, tc.rmse_figure, ns.name + ":none");
    rep.timings.emplace_back(sc + "/attack/" + ns.name, sw.seconds());

    if (detail::defense_enabled(cfg, "adversarial_training")) {
      sw = {};
      auto h = defense::adversarial_training(trainer, tset, {ns.spec}, cfg.aug_fraction,
                                             derive_seed(seed, sc + "/defense/" + ns.name), cfg.exec);
      const auto ev = evaluate_twins(base, h, vset, ns.xs, twins, acc, cfg.exec);
      detail::record_defense(rep, sc, ns.name, h.name, ev, tc.figure);
      h.name = ns.name + ":adversarial_training";
      hardened_list.push_back(std::move(h));
      rep.timings.emplace_back(sc + "/defense/" + ns.name + "/adversarial_training", sw.seconds());
    }
    if (detail::defense_enabled(cfg, "feature_removal")) {
      sw = {};
      const auto h = defense::feature_removal(trainer, tset, ns.spec.affected_fields());
      const auto ev = evaluate_twins(base, h, vset, ns.xs, twins, acc, cfg.exec);
      detail::record_defense(rep, sc, ns.name, h.name, ev, tc.figure);
      double worst = 0.0;
      for (double d : ev.residual_degradation) worst = std::max(worst, std::abs(d));
      rep.add_metric(sc, "removal." + ns.name + ".max_abs_residual", worst);
      rep.timings.emplace_back(sc + "/defense/" + ns.name + "/feature_removal", sw.seconds());
    }
  }

  // Each adversarially trained model against every attack at its top level.
  if (aligned && !hardened_list.empty()) {
    const auto m = defense::cross_evaluate(hardened_list, vset, strongest, acc, cfg.exec);
    for (std::size_t d = 0; d < hardened_list.size(); ++d)
      for (std::size_t a = 0; a < strongest.size(); ++a)
        rep.add_metric(sc, "cross." + hardened_list[d].name + "." + attack_names[a], m(d, a));
  }
  return rep;
}

std::vector<double> draw_indices(std::size_t n) {
  std::vector<double> xs;
  for (std::size_t i = 1; i <= n; ++i) xs.push_back(static_cast<double>(i));
  return xs;
}

std::map<std::string, threat::FeatureScope> scope_map(int id) {
  std::map<std::string, threat::FeatureScope> m;
  for (auto& [n, s] : scenario_scopes(id)) m[n] = s;
  return m;
}

}  // namespace

report::ExperimentReport run_cs2(const CaseConfig& cfg, std::uint64_t seed) {
  report::ExperimentReport rep;
  CqiDataset data;
  if (!cfg.data_path.empty()) {
    IngestLog log;
    data = std::get<CqiDataset>(ingest_real_dataset(2, cfg.data_path, log));
    rep.provenance.push_back("cs2 ingest: " + cfg.data_path + ", rows " + std::to_string(log.rows) + ", skipped " +
                             std::to_string(log.skipped));
    for (const auto& m : log.messages) rep.provenance.push_back("cs2 ingest: " + m);
  } else {
    data = std::get<CqiDataset>(generate_scenario_data(2, cfg.size, seed));
  }
  rep.references.push_back({"cs2", "baseline.Acc", 0.95});
  rep.references.push_back({"cs2", "baseline.RMSE", 0.22});
  for (const auto* s : {"RSRP", "pktRxByt", "pktRx", "pktRx+pktRxByt"})
    rep.references.push_back({"cs2", std::string("tradeoff.") + s + ".adversarial_training", 1.01});
  rep.references.push_back({"cs2", "tradeoff.RSRP.feature_removal", 1.00});
  rep.references.push_back({"cs2", "tradeoff.pktRxByt.feature_removal", 1.01});
  rep.references.push_back({"cs2", "tradeoff.pktRx.feature_removal", 1.01});
  rep.references.push_back({"cs2", "tradeoff.pktRx+pktRxByt.feature_removal", 1.01});

  TabularCase tc;
  tc.id = 2;
  tc.table = data.table;
  tc.truth = data.cqi;
  tc.source = data.source;
  tc.classification = false;
  tc.train_fraction = 0.9;
  tc.figure = "fig4";
  tc.rmse_figure = "fig10";

  // Specs are built against T's statistics inside run_tabular's split; the
  // split is recomputed here so donors and std references come from T only.
  const auto split = split_indices(tc.table.size(), tc.train_fraction, derive_seed(seed, "cs2/split"));
  const Matrix xt = tc.table.values.select_rows(split.train);
  const auto& schema = tc.table.columns;
  const auto stds = detail::column_std(xt, schema);
  auto scopes = scope_map(2);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<NamedSpec> specs;
  {
    NamedSpec s{"RSRP", scopes["RSRP"], {}, draw_indices(7)};
    s.spec.target_fields = {"RSRP"};
    s.spec.mode = rsp::Mode::replace_random;
    s.spec.intensity_levels = s.xs;
    rsp::DonorPool pool;
    pool.values = column(xt, tc.table.index_of("RSRP"));
    pool.linked["RSRQ"] = column(xt, tc.table.index_of("RSRQ"));
    s.spec.donors = pool;
    s.spec.derived.edges = {{"RSRP", "RSRQ", rsp::Recompute::copy_from_donor}};
    specs.push_back(s);
  }
  auto additive = [&](const std::string& name, std::vector<std::string> targets, bool aiat) {
    NamedSpec s{name, scopes[name], {}, cfg.multipliers};
    s.spec.target_fields = targets;
    s.spec.mode = rsp::Mode::additive_std;
    s.spec.intensity_levels = cfg.multipliers;
    for (const auto& f : targets) {
      s.spec.std_reference[f] = stds.at(f);
      s.spec.constraints.push_back({f, rsp::Interval{0.0, inf}, rsp::ViolationAction::clamp});
    }
    if (aiat) s.spec.derived.edges = {{"pktRx", "pktRxAiat", rsp::Recompute::inverse_proportional}};
    specs.push_back(s);
  };
  additive("pktRxByt", {"pktRxByt"}, false);
  additive("pktRx", {"pktRx"}, true);
  additive("pktRx+pktRxByt", {"pktRx", "pktRxByt"}, true);

  return run_tabular(cfg, tc, std::move(specs), seed, std::move(rep));
}

report::ExperimentReport run_cs6(const CaseConfig& cfg, std::uint64_t seed) {
  report::ExperimentReport rep;
  SliceDataset data;
  if (!cfg.data_path.empty()) {
    IngestLog log;
    data = std::get<SliceDataset>(ingest_real_dataset(6, cfg.data_path, log));
    rep.provenance.push_back("cs6 ingest: " + cfg.data_path + ", rows " + std::to_string(log.rows) + ", skipped " +
                             std::to_string(log.skipped));
    for (const auto& m : log.messages) rep.provenance.push_back("cs6 ingest: " + m);
  } else {
    data = std::get<SliceDataset>(generate_scenario_data(6, cfg.size, seed));
  }
  rep.references.push_back({"cs6", "baseline.Acc", 1.00});
  rep.references.push_back({"cs6", "outsider.successes", 0.0});
  for (const auto* s : {"PDB", "PLR", "PDB+PLR"})
    rep.references.push_back({"cs6", std::string("tradeoff.") + s + ".adversarial_training", 1.00});
  rep.references.push_back({"cs6", "tradeoff.PDB.feature_removal", 1.50});
  rep.references.push_back({"cs6", "tradeoff.PLR.feature_removal", 1.00});
  rep.references.push_back({"cs6", "tradeoff.PDB+PLR.feature_removal", 1.50});

  TabularCase tc;
  tc.id = 6;
  tc.table = data.table;
  tc.truth = detail::as_doubles(data.labels);
  tc.source = data.source;
  tc.classification = true;
  tc.train_fraction = 0.9;

  auto scopes = scope_map(6);
  auto domain = [&](const std::string& f) {
    std::set<double> vals;
    for (double x : column(tc.table.values, tc.table.index_of(f))) vals.insert(x);
    return std::vector<double>(vals.begin(), vals.end());
  };
  const auto pdbs = domain("PacketDelayBudget");
  const auto plrs = domain("PacketLossRate");

  std::vector<NamedSpec> specs;
  auto replace = [&](const std::string& name, const std::string& field, const std::vector<double>& values) {
    NamedSpec s{name, scopes[name], {}, draw_indices(7)};
    s.spec.target_fields = {field};
    s.spec.mode = rsp::Mode::replace_random;
    s.spec.intensity_levels = s.xs;
    s.spec.donors = rsp::DonorPool{values, {}};
    s.spec.constraints.push_back({field, values, rsp::ViolationAction::reject});
    specs.push_back(s);
  };
  replace("PDB", "PacketDelayBudget", pdbs);
  replace("PLR", "PacketLossRate", plrs);
  {
    // Joint draw over the (PDB, PLR) grid; PLR rides along with the donor.
    NamedSpec s{"PDB+PLR", scopes["PDB+PLR"], {}, draw_indices(7)};
    s.spec.target_fields = {"PacketDelayBudget"};
    s.spec.mode = rsp::Mode::replace_random;
    s.spec.intensity_levels = s.xs;
    rsp::DonorPool pool;
    for (double d : pdbs)
      for (double l : plrs) {
        pool.values.push_back(d);
        pool.linked["PacketLossRate"].push_back(l);
      }
    s.spec.donors = pool;
    s.spec.derived.edges = {{"PacketDelayBudget", "PacketLossRate", rsp::Recompute::copy_from_donor}};
    specs.push_back(s);
  }

  // Outsider: every Day/Hour combination on every validation row.
  auto outsider = [&](const models::Model& model, const rsp::RawTable& v, const std::vector<double>& yv,
                      report::ExperimentReport& out) {
    if (!cfg.stage_enabled("inference")) return;
    rsp::PerturbationSpec day, hour;
    day.target_fields = {"Day"};
    day.mode = rsp::Mode::spoof_fixed;
    day.intensity_levels = {1, 2, 3, 4, 5, 6, 7};
    hour.target_fields = {"Hour"};
    hour.mode = rsp::Mode::spoof_fixed;
    for (int h = 0; h < 24; ++h) hour.intensity_levels.push_back(h);

    const auto clean = model.predict(v.values, cfg.exec);
    std::size_t successes = 0, examples = 0;
    attack::DegradationCurve c;
    c.scenario = "cs6";
    c.stage = attack::stage_name(attack::Stage::inference);
    c.scope = "Day+Hour";
    c.metric = "Acc";
    for (std::size_t d = 0; d < day.intensity_levels.size(); ++d) {
      const auto vd = rsp::apply_rsp(v, day, d, seed, cfg.exec).records;
      std::vector<double> accs;
      for (std::size_t h = 0; h < hour.intensity_levels.size(); ++h) {
        const auto vh = rsp::apply_rsp(vd, hour, h, seed, cfg.exec).records;
        const auto adv = model.predict(vh.values, cfg.exec);
        for (std::size_t r = 0; r < yv.size(); ++r)
          successes += threat::attack_success(clean.labels[r], adv.labels[r], static_cast<int>(yv[r]),
                                              threat::Task::classification)
                           ? 1
                           : 0;
        examples += yv.size();
        accs.push_back(threat::accuracy(std::vector<int>(yv.begin(), yv.end()), adv.labels));
      }
      c.points.push_back(attack::summarize(day.intensity_levels[d], accs));
    }
    out.add_metric("cs6", "outsider.successes", static_cast<double>(successes));
    out.add_metric("cs6", "outsider.examples", static_cast<double>(examples));
    out.add_metric("cs6", "outsider.combinations", 7.0 * 24.0);
    out.add_curve(c);
  };

  // The outsider scope is evaluated exhaustively above; insider scopes go
  // through the shared loop.
  return run_tabular(cfg, tc, std::move(specs), seed, std::move(rep), outsider);
}

}  // namespace myopic::scenarios
