// CS3: online CQI prediction under sparse spoofed reports.

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "case_common.hpp"

namespace myopic::scenarios {

namespace {

struct TraceRun {
  std::string series;  // "<mobility>:<mode>"
  std::vector<double> differential;
  double clean_final = 0.0;
};

}  // namespace

report::ExperimentReport run_cs3(const CaseConfig& cfg, std::uint64_t seed) {
  report::ExperimentReport rep;
  const std::string sc = "cs3";
  const bool real = !cfg.data_path.empty();
  std::vector<CqiSeries> traces;
  if (real) {
    IngestLog log;
    traces = std::get<std::vector<CqiSeries>>(ingest_real_dataset(3, cfg.data_path, log));
    rep.provenance.push_back("cs3 ingest: " + cfg.data_path + ", rows " + std::to_string(log.rows) + ", skipped " +
                             std::to_string(log.skipped));
    for (const auto& m : log.messages) rep.provenance.push_back("cs3 ingest: " + m);
    if (traces.empty()) throw std::invalid_argument("cs3: no usable trace in " + cfg.data_path);
  }
  if (cfg.scope) detail::check_scope_schema(*cfg.scope, {"CQI"});

  auto mspec = detail::model_or(cfg, derive_seed(seed, "cs3/model"));
  if (mspec.kind != models::Kind::recurrent) throw std::invalid_argument("cs3 needs a recurrent model");
  const int trials = detail::trials_or(cfg, 10);
  const std::size_t length = cfg.size ? cfg.size : default_size(3);
  if (!real && length < 2 * static_cast<std::size_t>(mspec.recurrent.window) + 120)
    throw std::invalid_argument("cs3: series too short for the window and two spoof periods");
  const std::vector<attack::SpoofMode> modes{attack::SpoofMode::floor_zero, attack::SpoofMode::jitter};
  if (!cfg.stage_enabled("online")) {
    rep.provenance.push_back("cs3: online stage disabled");
    return rep;
  }

  // Jobs: (trial, trace); each fits its own model and runs every spoof mode.
  const std::size_t per_trial = real ? traces.size() : 2;
  const std::size_t jobs = static_cast<std::size_t>(trials) * per_trial;
  std::vector<std::vector<TraceRun>> runs(jobs);
  std::vector<double> control(jobs, 0.0);
  std::vector<std::size_t> spoofs(jobs, 0), horizons(jobs, 0);
  std::vector<std::exception_ptr> errors(jobs);
  detail::Stopwatch sw;

  auto job = [&](std::size_t j) {
    try {
      const auto t = j / per_trial, k = j % per_trial;
      const auto tseed = derive_seed(seed, "cs3/trial", t);
      const CqiSeries s = real ? traces[k]
                               : generate_cqi_series(k == 0 ? Mobility::stationary : Mobility::driving, length,
                                                     derive_seed(tseed, "series"));
      const std::size_t warm = s.cqi.size() / 2;
      const std::span<const double> all(s.cqi);
      const auto model = models::init_online(mspec.recurrent, all.first(warm), derive_seed(tseed, "gru", k));
      const auto op = all.subspan(warm);
      attack::OnlineAttackConfig oc;
      oc.horizon = static_cast<int>(std::min<std::size_t>(600, op.size()));
      oc.seed = derive_seed(tseed, "spoof", k);
      horizons[j] = static_cast<std::size_t>(oc.horizon);

      oc.mode = attack::SpoofMode::none;
      const auto ctl = attack::run_online_attack(model, op, oc);
      for (double d : ctl.differential) control[j] = std::max(control[j], std::abs(d));
      for (auto m : modes) {
        oc.mode = m;
        const auto r = attack::run_online_attack(model, op, oc);
        spoofs[j] = r.spoofed_at.size();
        runs[j].push_back({(real ? s.name : mobility_name(s.mobility)) + ":" + attack::spoof_name(m), r.differential,
                           r.crmse_clean.back()});
      }
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  if (cfg.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs); ++j) job(static_cast<std::size_t>(j));
  } else {
    for (std::size_t j = 0; j < jobs; ++j) job(j);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  rep.timings.emplace_back("cs3/online", sw.seconds());

  // Average the differential over trials, per trace and mode.
  for (std::size_t k = 0; k < per_trial; ++k) {
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const auto& first = runs[k][m];
      const std::size_t len = first.differential.size();
      attack::DegradationCurve c;
      c.scenario = sc;
      c.stage = attack::stage_name(attack::Stage::online);
      c.scope = first.series;
      c.metric = "dCRMSE";
      std::vector<double> finals, clean_finals;
      for (std::size_t step = 0; step < len; ++step) {
        std::vector<double> v;
        for (int t = 0; t < trials; ++t) v.push_back(runs[static_cast<std::size_t>(t) * per_trial + k][m].differential[step]);
        c.points.push_back(attack::summarize(static_cast<double>(step + 1), v));
      }
      for (int t = 0; t < trials; ++t) {
        const auto& r = runs[static_cast<std::size_t>(t) * per_trial + k][m];
        finals.push_back(r.differential.back());
        clean_finals.push_back(r.clean_final);
      }
      rep.add_metric(sc, first.series + ".final_differential", mean(finals));
      if (m == 0) rep.add_metric(sc, first.series.substr(0, first.series.find(':')) + ".final_clean_crmse",
                                 mean(clean_finals));
      rep.add_curve(std::move(c), "fig7", first.series);
    }
  }
  rep.add_metric(sc, "spoofed_reports", static_cast<double>(spoofs.front()));
  rep.add_metric(sc, "spoof_share", static_cast<double>(spoofs.front()) / static_cast<double>(2 * horizons.front()));
  rep.add_metric(sc, "control.max_abs_differential", *std::max_element(control.begin(), control.end()));
  return rep;
}

}  // namespace myopic::scenarios
