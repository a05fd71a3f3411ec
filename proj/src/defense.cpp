#include "myopic/defense.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace myopic::defense {

Matrix Hardened::project(const Matrix& full) const { return full.select_cols(kept); }

attack::EvalSet Hardened::project(const attack::EvalSet& full) const {
  return {project(full.x), full.truth, full.groups};
}

Hardened as_hardened(std::string name, models::Model model) {
  Hardened h{std::move(name), std::move(model), {}};
  h.kept.resize(h.model.schema().size());
  for (std::size_t i = 0; i < h.kept.size(); ++i) h.kept[i] = i;
  return h;
}

Hardened adversarial_training(const Trainer& trainer, const Dataset& t, const std::vector<rsp::PerturbationSpec>& specs,
                              double aug_fraction, std::uint64_t seed, Exec exec) {
  if (specs.empty()) throw std::invalid_argument("adversarial training: empty perturbation spec list");
  if (!(aug_fraction > 0.0 && aug_fraction < 1.0))
    throw std::invalid_argument("adversarial training: aug_fraction must lie in (0,1)");
  if (t.x.rows() != t.targets.rows()) throw std::invalid_argument("adversarial training: shape mismatch");
  const std::size_t n = t.x.rows();
  const auto count = static_cast<std::size_t>(std::ceil(aug_fraction * static_cast<double>(n) - 1e-9));
  auto order = permutation(n, derive_seed(seed, "defense/aug"));
  order.resize(count);
  std::sort(order.begin(), order.end());

  // T_aug as a raw table; ids index back into T for the targets.
  rsp::RawTable aug{t.schema, t.x.select_rows(order), order};

  Matrix x = t.x, y = t.targets;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (std::size_t level = 0; level < specs[s].intensity_levels.size(); ++level) {
      auto spec = specs[s];
      if (spec.std_reference.empty()) {
        // Scale by the statistics of the full T, not of the small T_aug.
        for (const auto& f : spec.target_fields)
          if (aug.has(f)) spec.std_reference[f] = population_std(column(t.x, aug.index_of(f)));
      }
      spec.subset.clear();
      const auto res = rsp::apply_rsp(aug, spec, level, derive_seed(seed, "defense/aug-rsp", s), exec);
      for (std::size_t r = 0; r < res.records.size(); ++r) {
        x.append_row(res.records.values.row(r));
        y.append_row(t.targets.row(res.records.ids[r]));
      }
    }
  }
  return as_hardened("adversarial_training", trainer(x, y, t.schema));
}

Hardened feature_removal(const Trainer& trainer, const Dataset& t, const std::vector<std::string>& removed) {
  std::set<std::string> drop(removed.begin(), removed.end());
  for (const auto& r : drop)
    if (std::find(t.schema.begin(), t.schema.end(), r) == t.schema.end())
      throw std::invalid_argument("feature removal: unknown feature '" + r + "'");
  std::vector<std::size_t> kept;
  std::vector<std::string> schema;
  for (std::size_t i = 0; i < t.schema.size(); ++i)
    if (!drop.count(t.schema[i])) {
      kept.push_back(i);
      schema.push_back(t.schema[i]);
    }
  if (kept.empty()) throw std::invalid_argument("feature removal: cannot remove every feature");
  Hardened h{"feature_removal", trainer(t.x.select_cols(kept), t.targets, schema), kept};
  return h;
}

Hardened distillation(const models::Model& teacher, const Matrix& x, double temperature, Exec exec) {
  return as_hardened("distillation", models::distill_forest(teacher, x, temperature, exec));
}

DefenseEvaluation evaluate_defense(const Hardened& baseline, const Hardened& hardened, const attack::EvalSet& v,
                                   const std::vector<AdversarialPoint>& adversarial,
                                   const attack::MetricOptions& opt, Exec exec) {
  DefenseEvaluation ev;
  const double pb = attack::evaluate_metric(baseline.model.predict(baseline.project(v.x), exec), v.truth, opt);
  const double ph = attack::evaluate_metric(hardened.model.predict(hardened.project(v.x), exec), v.truth, opt);
  ev.tradeoff = threat::tradeoff(pb, ph, opt.metric);
  ev.baseline_curve.metric = ev.residual.metric = threat::metric_name(opt.metric);
  ev.baseline_curve.defense = "none";
  ev.residual.defense = hardened.name;
  for (const auto& a : adversarial) {
    const auto rb = attack::run_inference_attack(baseline.model, baseline.project(v), baseline.project(a.set), opt,
                                                 false, exec);
    const auto rh = attack::run_inference_attack(hardened.model, hardened.project(v), hardened.project(a.set), opt,
                                                 false, exec);
    ev.baseline_curve.points.push_back({a.x, rb.aggregate.adversarial, 0.0, 1});
    ev.residual.points.push_back({a.x, rh.aggregate.adversarial, 0.0, 1});
    ev.residual_degradation.push_back(rh.aggregate.degradation);
  }
  return ev;
}

Matrix cross_evaluate(const std::vector<Hardened>& defenses, const attack::EvalSet& v,
                      const std::vector<attack::EvalSet>& attacks, const attack::MetricOptions& opt, Exec exec) {
  Matrix m(defenses.size(), attacks.size());
  for (std::size_t d = 0; d < defenses.size(); ++d)
    for (std::size_t a = 0; a < attacks.size(); ++a)
      m(d, a) = attack::run_inference_attack(defenses[d].model, defenses[d].project(v), defenses[d].project(attacks[a]),
                                             opt, false, exec)
                    .aggregate.degradation;
  return m;
}

}  // namespace myopic::defense
