// CS1: flow classification under payload padding by attacker UEs, at
// inference and training stage, with distillation as the defense.

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "case_common.hpp"
#include "myopic/flow.hpp"

namespace myopic::scenarios {

namespace {

const std::vector<int> kPadLevels{0, 100, 200, 300};

std::vector<double> flow_labels(const std::vector<flow::FlowRecord>& flows) {
  std::vector<double> y;
  y.reserve(flows.size());
  for (const auto& f : flows) y.push_back(static_cast<double>(f.label));
  return y;
}

/// Picks about 5% of the internal source hosts when the capture flags none.
std::vector<std::string> pick_attackers(const std::vector<flow::FlowRecord>& flows, const flow::FeatureExtractor& fx,
                                        std::uint64_t seed) {
  std::set<std::string> hosts;
  for (const auto& f : flows)
    if (fx.is_internal(f.key.src_ip)) hosts.insert(f.key.src_ip);
  std::vector<std::string> all(hosts.begin(), hosts.end());
  if (all.empty()) throw std::invalid_argument("cs1: capture has no internal hosts");
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.05 * static_cast<double>(all.size()))));
  auto order = permutation(all.size(), seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(all[order[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

report::ExperimentReport run_cs1(const CaseConfig& cfg, std::uint64_t seed) {
  report::ExperimentReport rep;
  const std::string sc = "cs1";
  detail::Stopwatch sw;

  TrafficCapture cap;
  if (!cfg.data_path.empty()) {
    IngestLog log;
    cap = std::get<TrafficCapture>(ingest_real_dataset(1, cfg.data_path, log));
    rep.provenance.push_back("cs1 ingest: " + cfg.data_path + ", rows " + std::to_string(log.rows) + ", skipped " +
                             std::to_string(log.skipped));
    for (const auto& m : log.messages) rep.provenance.push_back("cs1 ingest: " + m);
  } else {
    cap = std::get<TrafficCapture>(generate_scenario_data(1, cfg.size, seed));
  }
  rep.references.push_back({sc, "baseline.Acc", 0.99});
  rep.references.push_back({sc, "baseline.F1", 0.81});
  rep.references.push_back({sc, "tradeoff.distillation", 0.97});

  // One extractor for X and every adversarial twin.
  flow::FeatureExtractor fx;
  for (const auto& p : cap.internal_prefixes) fx.internal_prefixes.push_back(flow::Ipv4Prefix::parse(p));
  const flow::FeatureExtractor fx_adv = fx;
  if (fx.fingerprint() != fx_adv.fingerprint()) throw std::logic_error("cs1: extractor configurations diverge");

  const auto rule = cap.label_rule();
  auto clean_flows = flow::aggregate_flows(cap.packets);
  flow::apply_labels(clean_flows, rule);
  if (clean_flows.size() < 10) throw std::invalid_argument("cs1: too few flows in the capture");
  if (cap.attackers.empty()) cap.attackers = pick_attackers(clean_flows, fx, derive_seed(seed, "cs1/attackers"));
  const std::set<std::string> attackers(cap.attackers.begin(), cap.attackers.end());

  // Padded twins, one per pad level, aligned with the clean flows.
  std::vector<std::vector<flow::FlowRecord>> padded;
  for (int pad : kPadLevels) {
    auto f = flow::aggregate_flows(flow::pad_payloads(cap.packets, attackers, pad, derive_seed(seed, "cs1/pad")));
    flow::apply_labels(f, rule);
    if (f.size() != clean_flows.size()) throw std::logic_error("cs1: padding changed the flow segmentation");
    for (std::size_t i = 0; i < f.size(); ++i)
      if (flow::flow_id(f[i]) != flow::flow_id(clean_flows[i]))
        throw std::invalid_argument("misaligned twins: padded flow " + std::to_string(i) + " has no clean twin");
    padded.push_back(std::move(f));
  }
  rep.timings.emplace_back("cs1/flows", sw.seconds());

  const Matrix x = fx.extract_all(clean_flows);
  const auto y = flow_labels(clean_flows);
  std::size_t attacker_flows = 0;
  for (const auto& f : clean_flows) attacker_flows += attackers.count(f.key.src_ip);
  rep.add_metric(sc, "flows", static_cast<double>(clean_flows.size()));
  rep.add_metric(sc, "attacker_flow_fraction", static_cast<double>(attacker_flows) / clean_flows.size());
  rep.provenance.push_back("cs1 source: " + cap.source + ", packets " + std::to_string(cap.packets.size()) +
                           ", extractor " + hex64(fx.fingerprint()));

  // Features outside the declared affected set must never move.
  {
    const auto scope = scenario_scopes(1).front().second;
    const Matrix xa = fx_adv.extract_all(padded.back());
    std::size_t out_of_scope = 0;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c)
        if (x(r, c) != xa(r, c) && std::find(scope.affected.begin(), scope.affected.end(), flow::kFeatureNames[c]) ==
                                       scope.affected.end())
          ++out_of_scope;
    rep.add_metric(sc, "scope.out_of_scope_diffs", static_cast<double>(out_of_scope));
    if (cfg.scope) detail::check_scope_schema(*cfg.scope, flow::kFeatureNames);
  }

  const auto split = split_indices(x.rows(), 0.8, derive_seed(seed, "cs1/split"));
  const Matrix xt = x.select_rows(split.train);
  std::vector<double> yt, yv;
  std::vector<std::string> groups;
  std::vector<flow::FlowRecord> t_flows;
  for (auto i : split.train) {
    yt.push_back(y[i]);
    t_flows.push_back(clean_flows[i]);
  }
  for (auto i : split.validation) {
    yv.push_back(y[i]);
    const auto& src = clean_flows[i].key.src_ip;
    groups.push_back(attackers.count(src) ? src : "environment");
  }
  const attack::EvalSet vclean{x.select_rows(split.validation), yv, groups};

  const auto mspec = detail::model_or(cfg, derive_seed(seed, "cs1/model"));
  sw = {};
  const auto base = models::Model::train(mspec, xt, models::values_to_targets(yt), flow::kFeatureNames, cfg.exec);
  rep.timings.emplace_back("cs1/train", sw.seconds());

  attack::MetricOptions acc, f1;
  acc.metric = threat::Metric::accuracy;
  f1.metric = threat::Metric::f1;
  f1.positive_label = static_cast<int>(flow::Label::active);
  const auto pv = base.predict(vclean.x, cfg.exec);
  rep.add_metric(sc, "baseline.Acc", attack::evaluate_metric(pv, yv, acc));
  rep.add_metric(sc, "baseline.F1", attack::evaluate_metric(pv, yv, f1));

  // Inference stage.
  std::vector<defense::AdversarialPoint> points;
  for (std::size_t l = 0; l < kPadLevels.size(); ++l) {
    const Matrix xa = fx_adv.extract_all(padded[l]);
    points.push_back({static_cast<double>(kPadLevels[l]), {xa.select_rows(split.validation), yv, groups}});
  }
  if (cfg.stage_enabled("inference")) {
    sw = {};
    std::map<std::string, attack::DegradationCurve> per_group;
    attack::DegradationCurve agg_acc, agg_f1;
    double env_change = 0.0;
    for (const auto& pt : points) {
      const auto ra = attack::run_inference_attack(base, vclean, pt.set, acc, true, cfg.exec);
      const auto rf = attack::run_inference_attack(base, vclean, pt.set, f1, false, cfg.exec);
      agg_acc.points.push_back({pt.x, ra.aggregate.adversarial, 0.0, 1});
      agg_f1.points.push_back({pt.x, rf.aggregate.adversarial, 0.0, 1});
      for (const auto& [g, r] : ra.per_group) {
        auto& c = per_group[g];
        c.points.push_back({pt.x, r.adversarial, 0.0, 1});
        if (g == "environment") env_change = std::max(env_change, static_cast<double>(r.successes));
      }
    }
    auto tag = [&](attack::DegradationCurve c, const std::string& scope, const std::string& metric) {
      c.scenario = sc;
      c.stage = attack::stage_name(attack::Stage::inference);
      c.scope = scope;
      c.metric = metric;
      return c;
    };
    rep.add_curve(tag(agg_acc, "all", "Acc"));
    rep.add_curve(tag(agg_f1, "all", "F1"));
    for (auto& [g, c] : per_group) {
      rep.add_curve(tag(c, g, "Acc"));
      if (g != "environment") {
        rep.add_metric(sc, "inference." + g + ".Acc_clean", c.points.front().mean);
        rep.add_metric(sc, "inference." + g + ".Acc_padded", c.points.back().mean);
      }
    }
    rep.add_metric(sc, "inference.environment.changed_predictions", env_change);
    rep.add_metric(sc, "inference.Acc_padded", agg_acc.points.back().mean);
    rep.add_metric(sc, "inference.F1_padded", agg_f1.points.back().mean);
    rep.timings.emplace_back("cs1/inference", sw.seconds());
  }

  // Distillation.
  const bool distill = detail::defense_enabled(cfg, "distillation");
  if (distill) {
    sw = {};
    const auto hb = defense::as_hardened("none", base);
    const auto hd = defense::distillation(base, xt, 1.0, cfg.exec);
    auto ev = defense::evaluate_defense(hb, hd, vclean, points, acc, cfg.exec);
    detail::record_defense(rep, sc, "padding", hd.name, ev);
    const auto evf = defense::evaluate_defense(hb, hd, vclean, {}, f1, cfg.exec);
    rep.tradeoffs.push_back({sc, "padding", hd.name, evf.tradeoff});
    rep.timings.emplace_back("cs1/distillation", sw.seconds());
  }

  // Training stage: pooled poisoning of T with the maximally padded twins.
  if (cfg.stage_enabled("training")) {
    sw = {};
    const auto& adv_flows = padded.back();
    const auto trial = [&](double ratio, std::uint64_t tseed) {
      const auto poisoned = flow::poison_training_set(t_flows, attackers, ratio, adv_flows, tseed);
      const Matrix xp = fx_adv.extract_all(poisoned.flows);
      const auto model =
          models::Model::train(mspec, xp, models::values_to_targets(flow_labels(poisoned.flows)), flow::kFeatureNames,
                               Exec::serial);
      const auto p = model.predict(vclean.x, Exec::serial);
      std::vector<double> out{attack::evaluate_metric(p, yv, acc), attack::evaluate_metric(p, yv, f1)};
      if (distill) {
        const auto student = models::distill_forest(model, xp, 1.0, Exec::serial);
        const auto ps = student.predict(vclean.x, Exec::serial);
        out.push_back(attack::evaluate_metric(ps, yv, acc));
        out.push_back(attack::evaluate_metric(ps, yv, f1));
      }
      return out;
    };
    std::vector<std::string> metrics{"Acc", "F1"};
    if (distill) metrics.insert(metrics.end(), {"Acc", "F1"});
    auto curves = attack::run_training_attack(trial, cfg.ratios, detail::trials_or(cfg, 5), metrics,
                                              derive_seed(seed, "cs1/poison"), cfg.exec);
    for (std::size_t i = 0; i < curves.size(); ++i) {
      auto& c = curves[i];
      c.scenario = sc;
      c.scope = "padding";
      c.defense = i < 2 ? "none" : "distillation";
      rep.add_metric(sc, "training." + c.defense + "." + c.metric + "_at_max", c.points.back().mean);
      const auto series = c.metric + ":" + c.defense;
      rep.add_curve(std::move(c), "fig5", series);
    }
    rep.timings.emplace_back("cs1/training", sw.seconds());
  }
  return rep;
}

}  // namespace myopic::scenarios
