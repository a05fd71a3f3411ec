#include "myopic/attack.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace myopic::attack {

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::inference: return "inference";
    case Stage::training: return "training";
    case Stage::online: return "online";
  }
  return "?";
}

Stage stage_from_name(const std::string& s) {
  for (auto v : {Stage::inference, Stage::training, Stage::online})
    if (stage_name(v) == s) return v;
  throw std::invalid_argument("unknown stage '" + s + "'");
}

CurvePoint summarize(double x, std::span<const double> values) {
  CurvePoint p;
  p.x = x;
  p.trials = static_cast<int>(values.size());
  if (values.empty()) return p;
  p.mean = mean(values);
  p.std = values.size() > 1 ? population_std(values) : 0.0;
  return p;
}

std::string DegradationCurve::header() { return "scenario,stage,scope,x,metric,mean,std,trials,defense\n"; }

std::string DegradationCurve::to_delimited() const {
  std::ostringstream out;
  out << std::setprecision(10);
  for (const auto& p : points)
    out << scenario << ',' << stage << ',' << scope << ',' << p.x << ',' << metric << ',' << p.mean << ',' << p.std
        << ',' << p.trials << ',' << defense << '\n';
  return out.str();
}

void AttackPlan::validate() const {
  if (trials < 1) throw std::invalid_argument("attack plan: trials must be >= 1");
  if (stage == Stage::training)
    for (double r : sweep)
      if (r < 0.0 || r > 1.0) throw std::invalid_argument("attack plan: replacement ratios must lie in [0,1]");
}

std::vector<double> scalar_predictions(const models::Predictions& p) {
  if (!p.labels.empty()) return {p.labels.begin(), p.labels.end()};
  return p.values;
}

double evaluate_metric(const models::Predictions& p, std::span<const double> truth, const MetricOptions& opt) {
  using threat::Metric;
  const bool classification = !p.labels.empty() || (p.values.empty() && p.vectors.empty() && truth.empty());
  if (classification) {
    std::vector<int> t(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) t[i] = static_cast<int>(std::lround(truth[i]));
    switch (opt.metric) {
      case Metric::accuracy: return threat::accuracy(t, p.labels);
      case Metric::f1: return threat::f1_score(t, p.labels, opt.positive_label);
      default: throw std::invalid_argument("metric " + threat::metric_name(opt.metric) + " needs a regressor");
    }
  }
  if (p.values.empty()) throw std::invalid_argument("evaluate_metric: vector outputs need a scenario-specific metric");
  switch (opt.metric) {
    case Metric::accuracy: return threat::rounded_accuracy(truth, p.values);
    case Metric::rmse:
    case Metric::crmse: {
      if (!opt.rounded) return threat::rmse(truth, p.values);
      std::vector<double> r(p.values.size());
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::round(p.values[i]);
      return threat::rmse(truth, r);
    }
    default: throw std::invalid_argument("metric " + threat::metric_name(opt.metric) + " needs a classifier");
  }
}

namespace {

void check_twins(const EvalSet& a, const EvalSet& b) {
  if (a.x.rows() != b.x.rows() || a.x.cols() != b.x.cols())
    throw std::invalid_argument("misaligned twins: clean and adversarial sets differ in shape");
  if (a.truth.size() != a.x.rows()) throw std::invalid_argument("evaluation set: truth size mismatch");
  if (a.truth != b.truth) throw std::invalid_argument("misaligned twins: ground truth differs");
  if (a.groups != b.groups) throw std::invalid_argument("misaligned twins: group tags differ");
  if (!a.groups.empty() && a.groups.size() != a.x.rows())
    throw std::invalid_argument("evaluation set: group tag count mismatch");
}

models::Predictions subset(const models::Predictions& p, const std::vector<std::size_t>& idx) {
  models::Predictions s;
  for (auto i : idx) {
    if (!p.labels.empty()) s.labels.push_back(p.labels[i]);
    if (!p.values.empty()) s.values.push_back(p.values[i]);
  }
  return s;
}

InferencePoint score(const models::Predictions& clean, const models::Predictions& adv, std::span<const double> truth,
                     const MetricOptions& opt) {
  InferencePoint pt;
  pt.rows = truth.size();
  pt.clean = evaluate_metric(clean, truth, opt);
  pt.adversarial = evaluate_metric(adv, truth, opt);
  pt.degradation = threat::degradation(pt.clean, pt.adversarial, threat::orientation_of(opt.metric));
  const bool classification = !clean.labels.empty();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    bool s;
    if (classification)
      s = threat::attack_success(clean.labels[i], adv.labels[i], static_cast<int>(std::lround(truth[i])),
                                 threat::Task::classification);
    else
      s = threat::attack_success(clean.values[i], adv.values[i], truth[i], threat::Task::regression, opt.tau);
    pt.successes += s ? 1 : 0;
  }
  return pt;
}

}  // namespace

InferenceResult run_inference_attack(const models::Model& model, const EvalSet& clean, const EvalSet& adversarial,
                                     const MetricOptions& opt, bool group_by, Exec exec) {
  check_twins(clean, adversarial);
  const auto pc = model.predict(clean.x, exec);
  const auto pa = model.predict(adversarial.x, exec);
  InferenceResult r;
  r.aggregate = score(pc, pa, clean.truth, opt);
  if (group_by && !clean.groups.empty()) {
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < clean.groups.size(); ++i) members[clean.groups[i]].push_back(i);
    for (const auto& [g, idx] : members) {
      std::vector<double> t;
      for (auto i : idx) t.push_back(clean.truth[i]);
      r.per_group[g] = score(subset(pc, idx), subset(pa, idx), t, opt);
    }
  }
  return r;
}

std::vector<DegradationCurve> run_training_attack(const TrainingTrial& trial, std::vector<double> ratios, int trials,
                                                  const std::vector<std::string>& metrics, std::uint64_t seed,
                                                  Exec exec) {
  if (trials < 1) throw std::invalid_argument("training attack: trials must be >= 1");
  if (metrics.empty()) throw std::invalid_argument("training attack: no metrics requested");
  for (double r : ratios)
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("training attack: ratios must lie in [0,1]");
  if (std::find(ratios.begin(), ratios.end(), 0.0) == ratios.end()) ratios.insert(ratios.begin(), 0.0);

  const auto nt = static_cast<std::size_t>(trials);
  const std::size_t jobs = ratios.size() * nt;
  std::vector<std::vector<double>> values(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  auto run_job = [&](std::size_t j) {
    try {
      values[j] = trial(ratios[j / nt], derive_seed(seed, "attack/training", j % nt));
      if (values[j].size() != metrics.size()) throw std::logic_error("training trial returned the wrong metric count");
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs); ++j) run_job(static_cast<std::size_t>(j));
  } else {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<DegradationCurve> curves(metrics.size());
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    curves[m].stage = stage_name(Stage::training);
    curves[m].metric = metrics[m];
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
      std::vector<double> v(nt);
      for (std::size_t t = 0; t < nt; ++t) v[t] = values[ri * nt + t][m];
      curves[m].points.push_back(summarize(std::round(ratios[ri] * 1e4) / 100.0, v));
    }
  }
  return curves;
}

std::string spoof_name(SpoofMode m) {
  switch (m) {
    case SpoofMode::none: return "none";
    case SpoofMode::floor_zero: return "floor_zero";
    case SpoofMode::jitter: return "jitter";
  }
  return "?";
}

SpoofMode spoof_from_name(const std::string& s) {
  for (auto m : {SpoofMode::none, SpoofMode::floor_zero, SpoofMode::jitter})
    if (spoof_name(m) == s) return m;
  throw std::invalid_argument("unknown spoof mode '" + s + "'");
}

double spoof_value(double truth, const OnlineAttackConfig& cfg, std::uint64_t index) {
  switch (cfg.mode) {
    case SpoofMode::none: return truth;
    case SpoofMode::floor_zero: return cfg.lo;
    case SpoofMode::jitter: {
      const auto s = derive_seed(cfg.seed, "online/jitter");
      const int mag = 1 + static_cast<int>(unit_draw(s, 2 * index) * cfg.max_jitter);
      const double sign = unit_draw(s, 2 * index + 1) < 0.5 ? -1.0 : 1.0;
      return std::clamp(truth + sign * std::min(mag, cfg.max_jitter), cfg.lo, cfg.hi);
    }
  }
  return truth;
}

std::vector<double> cumulative_rmse(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("cumulative_rmse: size mismatch");
  std::vector<double> out(truth.size());
  double sq = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const double e = predicted[t] - truth[t];
    sq += e * e;
    out[t] = std::sqrt(sq / static_cast<double>(t + 1));
  }
  return out;
}

OnlineAttackResult run_online_attack(const models::OnlineModel& model, std::span<const double> series,
                                     const OnlineAttackConfig& cfg) {
  if (cfg.period < 1 || cfg.horizon < cfg.period)
    throw std::invalid_argument("online attack: horizon shorter than one spoof period");
  if (cfg.max_jitter < 1 || cfg.lo > cfg.hi || cfg.phase < 0)
    throw std::invalid_argument("online attack: invalid spoof parameters");
  const auto horizon = static_cast<std::size_t>(cfg.horizon);
  if (series.size() < horizon) throw std::invalid_argument("online attack: series does not cover the horizon");

  OnlineAttackResult r;
  r.reported.assign(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(horizon));
  if (cfg.mode != SpoofMode::none) {
    std::uint64_t k = 0;
    for (std::size_t t = static_cast<std::size_t>(cfg.phase); t < horizon; t += static_cast<std::size_t>(cfg.period)) {
      r.reported[t] = spoof_value(series[t], cfg, k++);
      r.spoofed_at.push_back(t);
    }
  }
  models::OnlineModel clean = model, attacked = model;
  double pc = clean.predict_next(), pa = attacked.predict_next();
  for (std::size_t t = 0; t < horizon; ++t) {
    r.clean_predictions.push_back(pc);
    r.attacked_predictions.push_back(pa);
    pc = clean.step(series[t]);
    pa = attacked.step(r.reported[t]);
  }
  const std::span<const double> truth(series.data(), horizon);
  r.crmse_clean = cumulative_rmse(truth, r.clean_predictions);
  r.crmse_attacked = cumulative_rmse(truth, r.attacked_predictions);
  r.differential.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) r.differential[t] = r.crmse_attacked[t] - r.crmse_clean[t];
  return r;
}

std::vector<std::vector<mimo::Point>> spoof_positions(const mimo::MimoTopology& topo,
                                                      const std::vector<std::size_t>& attackers, int steps,
                                                      double max_offset) {
  if (steps < 1 || max_offset < 0.0) throw std::invalid_argument("spoof_positions: invalid sweep");
  for (auto a : attackers) {
    if (a >= topo.size()) throw std::invalid_argument("spoof_positions: unknown attacker " + std::to_string(a));
    const int c = topo.cell_of(topo.ues[a]);
    if (c < 0 || c != topo.serving[a])
      throw std::invalid_argument("spoof_positions: attacker " + std::to_string(a) + " is outside its serving cell");
  }
  std::vector<std::vector<mimo::Point>> out;
  for (int s = 0; s <= steps; ++s) {
    auto pos = topo.ues;
    const double offset = max_offset * s / steps;
    for (auto a : attackers) {
      if (offset == 0.0) continue;
      const auto g = static_cast<std::size_t>(topo.serving[a]);
      const auto& cell = topo.cells[g];
      const mimo::Point p = topo.ues[a];
      double dx = p.x - topo.gnbs[g].x, dy = p.y - topo.gnbs[g].y;
      const double len = std::hypot(dx, dy);
      if (len == 0.0) {
        dx = 1.0;
        dy = 0.0;
      } else {
        dx /= len;
        dy /= len;
      }
      double reach = std::numeric_limits<double>::infinity();
      if (dx > 0) reach = std::min(reach, (cell.x1 - p.x) / dx);
      if (dx < 0) reach = std::min(reach, (cell.x0 - p.x) / dx);
      if (dy > 0) reach = std::min(reach, (cell.y1 - p.y) / dy);
      if (dy < 0) reach = std::min(reach, (cell.y0 - p.y) / dy);
      const double d = std::min(offset, reach);
      mimo::Point q{p.x + d * dx, p.y + d * dy};
      q.x = std::clamp(q.x, cell.x0, cell.x1);
      q.y = std::clamp(q.y, cell.y0, cell.y1);
      pos[a] = q;
    }
    out.push_back(std::move(pos));
  }
  return out;
}

}  // namespace myopic::attack
