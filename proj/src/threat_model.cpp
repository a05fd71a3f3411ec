#include "myopic/threat_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace myopic::threat {

namespace {

std::vector<std::string> missing_from(const std::vector<std::string>& subset,
                                      const std::vector<std::string>& superset) {
  std::set<std::string> sup(superset.begin(), superset.end());
  std::vector<std::string> out;
  for (const auto& id : subset)
    if (!sup.contains(id)) out.push_back(id);
  return out;
}

}  // namespace

std::vector<ScopeViolation> validate_scope(const FeatureScope& scope) {
  std::vector<ScopeViolation> out;
  auto check = [&](const std::vector<std::string>& sub, const std::vector<std::string>& sup,
                   const char* relation) {
    auto miss = missing_from(sub, sup);
    if (!miss.empty()) out.push_back({relation, std::move(miss)});
  };
  check(scope.known, scope.full, "known ⊄ full");
  check(scope.conscious, scope.known, "conscious ⊄ known");
  check(scope.affected, scope.full, "affected ⊄ full");
  check(scope.conscious, scope.affected, "conscious ⊄ affected");
  return out;
}

bool attack_success(const Prediction& clean, const Prediction& adversarial, const Prediction& truth,
                    Task task, double tau) {
  if (tau < 0.0) throw std::invalid_argument("attack_success: tau must be >= 0");
  if (task == Task::classification) {
    const auto* c = std::get_if<int>(&clean);
    const auto* a = std::get_if<int>(&adversarial);
    if (!c || !a || !std::holds_alternative<int>(truth))
      throw std::invalid_argument("attack_success: classification needs label predictions");
    return *a != *c;
  }
  const auto* c = std::get_if<double>(&clean);
  const auto* a = std::get_if<double>(&adversarial);
  const auto* t = std::get_if<double>(&truth);
  if (!c || !a || !t) throw std::invalid_argument("attack_success: regression needs real predictions");
  return std::abs(*a - *t) > std::abs(*c - *t) + tau;
}

AttackOutcome AttackOutcome::make(Prediction clean, Prediction adversarial, Prediction truth, Task task,
                                  double tau) {
  const bool ok = attack_success(clean, adversarial, truth, task, tau);
  return {std::move(clean), std::move(adversarial), std::move(truth), ok};
}

Orientation orientation_of(Metric m) {
  switch (m) {
    case Metric::rmse:
    case Metric::crmse:
      return Orientation::lower_better;
    default:
      return Orientation::higher_better;
  }
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::accuracy: return "Acc";
    case Metric::f1: return "F1";
    case Metric::rmse: return "RMSE";
    case Metric::crmse: return "CRMSE";
    case Metric::spectral_efficiency: return "SE";
  }
  return "?";
}

Metric metric_from_name(const std::string& name) {
  for (auto m : {Metric::accuracy, Metric::f1, Metric::rmse, Metric::crmse, Metric::spectral_efficiency})
    if (metric_name(m) == name) return m;
  throw std::invalid_argument("unknown metric: " + name);
}

std::string orientation_name(Orientation o) {
  return o == Orientation::higher_better ? "higher_better" : "lower_better";
}

TradeoffReport tradeoff(double p_base, double p_hardened, Metric metric) {
  if (!(p_hardened > 0.0)) throw std::invalid_argument("tradeoff: hardened performance must be > 0");
  return {metric, p_base, p_hardened, p_base / p_hardened};
}

double degradation(double metric_clean, double metric_adv, Orientation orientation) {
  return orientation == Orientation::higher_better ? metric_clean - metric_adv : metric_adv - metric_clean;
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("accuracy: size mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double f1_score(std::span<const int> truth, std::span<const int> predicted, int positive_label) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("f1_score: size mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive_label;
    const bool p = predicted[i] == positive_label;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double rmse(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("rmse: size mismatch");
  if (truth.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

double rounded_accuracy(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("rounded_accuracy: size mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += std::lround(predicted[i]) == std::lround(truth[i]);
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace myopic::threat
