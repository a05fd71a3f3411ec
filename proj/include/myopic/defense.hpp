#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "myopic/attack.hpp"
#include "myopic/models.hpp"
#include "myopic/perturbation.hpp"
#include "myopic/threat_model.hpp"

namespace myopic::defense {

/// Training set in feature space with named columns; `targets` follows the
/// Model::train convention.
struct Dataset {
  std::vector<std::string> schema;
  Matrix x;
  Matrix targets;
};

using Trainer = std::function<models::Model(const Matrix& x, const Matrix& targets,
                                            const std::vector<std::string>& schema)>;

/// A model plus the columns of the full schema it reads.
struct Hardened {
  std::string name;
  models::Model model;
  std::vector<std::size_t> kept;

  Matrix project(const Matrix& full) const;
  attack::EvalSet project(const attack::EvalSet& full) const;
};

/// Wraps a model trained on the full schema.
Hardened as_hardened(std::string name, models::Model model);

/// Perturbs a seeded aug_fraction of T under every spec at every intensity
/// level and retrains on T plus all perturbed copies (rejected copies are
/// dropped). Throws on an empty spec list or aug_fraction outside (0,1).
Hardened adversarial_training(const Trainer& trainer, const Dataset& t, const std::vector<rsp::PerturbationSpec>& specs,
                              double aug_fraction, std::uint64_t seed, Exec exec = Exec::parallel);

/// Retrains on the schema without `removed`. Throws on unknown names or when
/// nothing would be left.
Hardened feature_removal(const Trainer& trainer, const Dataset& t, const std::vector<std::string>& removed);

/// Forest distillation wrapped as a defense.
Hardened distillation(const models::Model& teacher, const Matrix& x, double temperature = 1.0,
                      Exec exec = Exec::parallel);

/// Adversarial evaluation set tagged with its sweep position.
struct AdversarialPoint {
  double x = 0.0;
  attack::EvalSet set;
};

struct DefenseEvaluation {
  threat::TradeoffReport tradeoff;
  attack::DegradationCurve baseline_curve;  // metric under attack, baseline model
  attack::DegradationCurve residual;        // metric under attack, hardened model
  std::vector<double> residual_degradation; // hardened clean-vs-attacked damage per point
};

/// Tradeoff on clean V plus per-point metrics of both models under attack.
DefenseEvaluation evaluate_defense(const Hardened& baseline, const Hardened& hardened, const attack::EvalSet& v,
                                   const std::vector<AdversarialPoint>& adversarial,
                                   const attack::MetricOptions& opt, Exec exec = Exec::parallel);

/// Degradation of each defense (rows) against each named attack's set (cols).
Matrix cross_evaluate(const std::vector<Hardened>& defenses, const attack::EvalSet& v,
                      const std::vector<attack::EvalSet>& attacks, const attack::MetricOptions& opt,
                      Exec exec = Exec::parallel);

}  // namespace myopic::defense
