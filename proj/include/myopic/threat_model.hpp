#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace myopic::threat {

/// The four feature sets of the myopic threat model.
///
/// `full` is every feature the model analyzes, `known` the subset the
/// attacker is aware of, `conscious` the subset she deliberately perturbs and
/// `affected` everything her raw-space perturbation ends up changing.
/// Required relations: known ⊆ full, conscious ⊆ known, affected ⊆ full,
/// conscious ⊆ affected.
struct FeatureScope {
  std::vector<std::string> full;
  std::vector<std::string> known;
  std::vector<std::string> conscious;
  std::vector<std::string> affected;
};

struct ScopeViolation {
  std::string relation;                 // e.g. "known ⊄ full"
  std::vector<std::string> offending;   // identifiers breaking the relation

  bool operator==(const ScopeViolation&) const = default;
};

/// Returns every violated relation; an empty list means the scope is valid.
std::vector<ScopeViolation> validate_scope(const FeatureScope& scope);

enum class Task { classification, regression };

using Prediction = std::variant<int, double>;

/// Classification: success iff the adversarial label differs from the clean
/// one. Regression: success iff |adv - truth| > |clean - truth| + tau.
/// Throws std::invalid_argument on mixed prediction kinds or tau < 0.
bool attack_success(const Prediction& clean, const Prediction& adversarial, const Prediction& truth,
                    Task task, double tau = 0.0);

struct AttackOutcome {
  Prediction clean_prediction;
  Prediction adversarial_prediction;
  Prediction ground_truth;
  bool success = false;

  static AttackOutcome make(Prediction clean, Prediction adversarial, Prediction truth, Task task,
                            double tau = 0.0);
};

enum class Metric { accuracy, f1, rmse, crmse, spectral_efficiency };
enum class Orientation { higher_better, lower_better };

Orientation orientation_of(Metric m);
std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);
std::string orientation_name(Orientation o);

struct TradeoffReport {
  Metric metric = Metric::accuracy;
  double p_base = 0.0;
  double p_hardened = 0.0;
  double tradeoff = 1.0;
};

/// Baseline-to-hardened performance ratio on the same clean validation set.
/// Throws std::invalid_argument unless p_hardened > 0.
TradeoffReport tradeoff(double p_base, double p_hardened, Metric metric = Metric::accuracy);

/// Signed damage, positive when the attack hurts the defender.
double degradation(double metric_clean, double metric_adv, Orientation orientation);

// Aggregate metrics.
double accuracy(std::span<const int> truth, std::span<const int> predicted);
/// F1 of `positive_label`. Returns 0 when there are no true or predicted positives.
double f1_score(std::span<const int> truth, std::span<const int> predicted, int positive_label);
double rmse(std::span<const double> truth, std::span<const double> predicted);
/// Fraction of predictions that round to the integer target.
double rounded_accuracy(std::span<const double> truth, std::span<const double> predicted);

}  // namespace myopic::threat
