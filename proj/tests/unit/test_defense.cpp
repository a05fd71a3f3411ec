#include <gtest/gtest.h>

#include "myopic/defense.hpp"

using namespace myopic;
using namespace myopic::defense;

namespace {

Dataset toy(std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.schema = {"a", "b", "c", "d"};
  d.x = Matrix(n, 4);
  d.targets = Matrix(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 4; ++c) d.x(r, c) = unit_draw(seed, r * 4 + c);
    d.targets(r, 0) = d.x(r, 0) + 0.5 * d.x(r, 2) > 0.75 ? 1 : 0;
  }
  return d;
}

Trainer forest_trainer(std::size_t* rows_seen = nullptr) {
  return [rows_seen](const Matrix& x, const Matrix& y, const std::vector<std::string>& schema) {
    if (rows_seen) *rows_seen = x.rows();
    models::ModelSpec s;
    s.forest.trees = 15;
    s.seed = 3;
    return models::Model::train(s, x, y, schema, Exec::serial);
  };
}

attack::EvalSet as_eval(const Dataset& d) {
  attack::EvalSet v{d.x, {}, {}};
  for (std::size_t r = 0; r < d.x.rows(); ++r) v.truth.push_back(d.targets(r, 0));
  return v;
}

}  // namespace

TEST(Removal, AffectedSupersetDefusesAttack) {
  const auto t = toy(300, 1), vd = toy(200, 2);
  const auto v = as_eval(vd);
  const auto base = as_hardened("none", forest_trainer()(t.x, t.targets, t.schema));
  const auto hardened = feature_removal(forest_trainer(), t, {"a", "b"});
  std::vector<AdversarialPoint> adv;
  for (double shift : {0.1, 0.5, 2.0}) {
    auto a = v;
    for (std::size_t r = 0; r < a.x.rows(); ++r) {
      a.x(r, 0) += shift;
      a.x(r, 1) -= shift;
    }
    adv.push_back({shift, a});
  }
  const auto ev = evaluate_defense(base, hardened, v, adv, {});
  for (double d : ev.residual_degradation) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(ev.residual.points.size(), 3u);
  EXPECT_EQ(hardened.kept, (std::vector<std::size_t>{2, 3}));
}

TEST(Removal, EmptyRemovalIsBaselineRetrain) {
  const auto t = toy(200, 3);
  const auto h = feature_removal(forest_trainer(), t, {});
  const auto b = forest_trainer()(t.x, t.targets, t.schema);
  EXPECT_EQ(h.model.predict(t.x).scores, b.predict(t.x).scores);
  EXPECT_THROW(feature_removal(forest_trainer(), t, {"zz"}), std::invalid_argument);
  EXPECT_THROW(feature_removal(forest_trainer(), t, t.schema), std::invalid_argument);
}

TEST(Tradeoff, HardenedEqualsBaseline) {
  const auto t = toy(200, 4), vd = toy(100, 5);
  const auto base = as_hardened("none", forest_trainer()(t.x, t.targets, t.schema));
  const auto ev = evaluate_defense(base, base, as_eval(vd), {{1.0, as_eval(vd)}}, {});
  EXPECT_EQ(ev.tradeoff.tradeoff, 1.0);
  EXPECT_EQ(ev.baseline_curve.points[0].mean, ev.residual.points[0].mean);
}

TEST(AdversarialTraining, AugmentationCount) {
  const auto t = toy(200, 6);
  rsp::PerturbationSpec a, b;
  a.target_fields = {"a"};
  a.intensity_levels = {0.1, 0.5, 1.0};
  b.target_fields = {"b"};
  b.intensity_levels = {1.0, 2.0};
  std::size_t rows = 0;
  adversarial_training(forest_trainer(&rows), t, {a, b}, 0.05, 7);
  EXPECT_EQ(rows, 200u + 10u * 5u);
  EXPECT_THROW(adversarial_training(forest_trainer(), t, {}, 0.05, 7), std::invalid_argument);
  EXPECT_THROW(adversarial_training(forest_trainer(), t, {a}, 1.0, 7), std::invalid_argument);
}

TEST(AdversarialTraining, Deterministic) {
  const auto t = toy(200, 8);
  rsp::PerturbationSpec a;
  a.target_fields = {"a"};
  a.intensity_levels = {0.5, 1.0};
  const auto h1 = adversarial_training(forest_trainer(), t, {a}, 0.1, 9);
  const auto h2 = adversarial_training(forest_trainer(), t, {a}, 0.1, 9);
  EXPECT_EQ(h1.model.predict(t.x).scores, h2.model.predict(t.x).scores);
}

TEST(Cross, Matrix) {
  const auto t = toy(200, 10), vd = toy(100, 11);
  const auto v = as_eval(vd);
  const auto base = as_hardened("none", forest_trainer()(t.x, t.targets, t.schema));
  const auto rem = feature_removal(forest_trainer(), t, {"a"});
  auto atk = v;
  for (std::size_t r = 0; r < atk.x.rows(); ++r) atk.x(r, 0) = 1.0;
  const auto m = cross_evaluate({base, rem}, v, {v, atk}, {});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(1, 1), 0.0);
}
