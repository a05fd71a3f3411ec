#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "../support/gradcheck.hpp"
#include "myopic/models.hpp"
#include "myopic/serialize.hpp"

using namespace myopic;
using namespace myopic::models;

namespace {

ModelSpec small_forest(TaskKind task, std::uint64_t seed = 1) {
  ModelSpec s;
  s.kind = Kind::forest;
  s.task = task;
  s.forest.trees = 20;
  s.seed = seed;
  return s;
}

// Label depends on feature 0 only; the others are noise.
void informative(std::size_t n, std::uint64_t seed, Matrix& x, Matrix& y) {
  x = Matrix(n, 5);
  y = Matrix(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 5; ++c) x(r, c) = unit_draw(seed, r * 5 + c);
    y(r, 0) = x(r, 0) > 0.5 ? 1.0 : 0.0;
  }
}

}  // namespace

TEST(Forest, SeparableTrainingAccuracy) {
  Matrix x, y;
  informative(300, 1, x, y);
  const auto m = Model::train(small_forest(TaskKind::classify), x, y);
  const auto p = m.predict(x);
  for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(p.labels[r], static_cast<int>(y(r, 0)));
}

TEST(Forest, ConstantRegressionTarget) {
  Matrix x, y;
  informative(100, 2, x, y);
  Matrix c(100, 1, 4.25);
  const auto m = Model::train(small_forest(TaskKind::regress), x, c);
  for (double v : m.predict(x).values) EXPECT_NEAR(v, 4.25, 1e-6);
}

TEST(Forest, DeterministicAndSerialEqualsParallel) {
  Matrix x, y;
  informative(400, 3, x, y);
  const auto a = Model::train(small_forest(TaskKind::classify), x, y, {}, Exec::serial);
  const auto b = Model::train(small_forest(TaskKind::classify), x, y, {}, Exec::parallel);
  EXPECT_EQ(a.predict(x, Exec::serial).scores, b.predict(x, Exec::parallel).scores);
  EXPECT_EQ(a.serialize(), b.serialize());
}

TEST(Forest, MemorizesWithOneDeepTree) {
  Matrix x, y;
  informative(50, 4, x, y);
  for (std::size_t r = 0; r < 50; ++r) y(r, 0) = static_cast<double>(r % 3);
  auto s = small_forest(TaskKind::classify);
  s.forest.trees = 1;
  s.forest.bootstrap = false;
  s.forest.max_features = 5;
  const auto p = Model::train(s, x, y).predict(x);
  for (std::size_t r = 0; r < 50; ++r) EXPECT_EQ(p.labels[r], static_cast<int>(y(r, 0)));
}

TEST(Forest, ImportanceRanksInformativeFirst) {
  Matrix x, y;
  informative(500, 5, x, y);
  const auto imp = Model::train(small_forest(TaskKind::classify), x, y).feature_importance();
  EXPECT_EQ(imp.ranking.front().first, "f0");
  double total = 0.0;
  for (const auto& [id, s] : imp.ranking) total += s;
  EXPECT_NEAR(total, 1.0, 1e-9);
  const auto top = imp.top_k(3);
  EXPECT_EQ(std::set<std::string>(top.begin(), top.end()).size(), 3u);
}

TEST(Forest, NoiseImportanceNearUniform) {
  Matrix x(600, 6), y(600, 1);
  for (std::size_t r = 0; r < 600; ++r) {
    for (std::size_t c = 0; c < 6; ++c) x(r, c) = unit_draw(17, r * 6 + c);
    y(r, 0) = unit_draw(18, r) < 0.5 ? 0 : 1;
  }
  const auto imp = Model::train(small_forest(TaskKind::classify), x, y).feature_importance();
  for (const auto& [id, s] : imp.ranking) EXPECT_LE(s, 3.0 / 6.0) << id;
}

TEST(Forest, BatchOrderPreserved) {
  Matrix x, y;
  informative(200, 6, x, y);
  const auto m = Model::train(small_forest(TaskKind::classify), x, y);
  const auto all = m.predict(x);
  EXPECT_EQ(all.labels.size(), 200u);
  const std::vector<std::size_t> pick{7, 3, 150};
  const auto some = m.predict(x.select_rows(pick));
  for (std::size_t i = 0; i < pick.size(); ++i) EXPECT_EQ(some.labels[i], all.labels[pick[i]]);
}

TEST(ModelIo, SerializeRoundTrip) {
  Matrix x, y;
  informative(200, 7, x, y);
  const auto m = Model::train(small_forest(TaskKind::classify), x, y);
  const auto back = Model::deserialize(m.serialize());
  EXPECT_EQ(back.predict(x).scores, m.predict(x).scores);
  EXPECT_EQ(back.fingerprint(), m.fingerprint());

  ModelSpec ff;
  ff.kind = Kind::feedforward;
  ff.task = TaskKind::classify;
  ff.feedforward.epochs = 3;
  const auto n = Model::train(ff, x, y);
  EXPECT_EQ(Model::deserialize(n.serialize()).predict(x).scores, n.predict(x).scores);
}

TEST(ModelIo, SpecJsonStrict) {
  const auto s = small_forest(TaskKind::regress, 9);
  EXPECT_EQ(spec_to_json(spec_from_json(spec_to_json(s))), spec_to_json(s));
  auto j = spec_to_json(s);
  j["bogus"] = 1;
  EXPECT_THROW(spec_from_json(j), std::invalid_argument);
}

TEST(ModelIo, ShapeErrors) {
  Matrix x(3, 2), y(2, 1);
  EXPECT_THROW(Model::train(small_forest(TaskKind::classify), x, y), std::invalid_argument);
  EXPECT_THROW(Model::train(small_forest(TaskKind::classify), Matrix(), Matrix()), std::invalid_argument);
}

TEST(Feedforward, GradientCheck) {
  for (auto act : {Activation::tanh, Activation::sigmoid, Activation::relu}) {
    EXPECT_LE(gradcheck::feedforward_probe(act, OutputActivation::automatic, TaskKind::classify, 3), 1e-4);
    EXPECT_LE(gradcheck::feedforward_probe(act, OutputActivation::identity, TaskKind::regress, 4), 1e-4);
  }
  EXPECT_LE(gradcheck::feedforward_probe(Activation::tanh, OutputActivation::softplus, TaskKind::regress, 5), 1e-4);
  EXPECT_LE(gradcheck::feedforward_probe(Activation::tanh, OutputActivation::grouped_softmax,
                                         TaskKind::vector_regress, 6),
            1e-4);
}

TEST(Feedforward, ConstantTargetFixedPoint) {
  Matrix x, y;
  informative(80, 8, x, y);
  ModelSpec s;
  s.kind = Kind::feedforward;
  s.task = TaskKind::regress;
  s.feedforward.epochs = 5;
  const auto m = Model::train(s, x, Matrix(80, 1, 2.5));
  for (double v : m.predict(x).values) EXPECT_NEAR(v, 2.5, 1e-6);
}

TEST(Feedforward, LearnsSeparableClasses) {
  Matrix x, y;
  informative(400, 9, x, y);
  ModelSpec s;
  s.kind = Kind::feedforward;
  s.task = TaskKind::classify;
  s.feedforward.epochs = 60;
  const auto p = Model::train(s, x, y).predict(x);
  std::vector<int> t;
  for (std::size_t r = 0; r < 400; ++r) t.push_back(static_cast<int>(y(r, 0)));
  int hit = 0;
  for (std::size_t r = 0; r < 400; ++r) hit += p.labels[r] == t[r];
  EXPECT_GE(hit, 380);
}

TEST(Recurrent, BpttGradientCheck) {
  const auto w = OnlineModel::initial_weights(4, 3);
  auto flat = w.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = unit_draw(21, i) - 0.5;
  GruWeights probe = w;
  probe.assign(flat);
  std::vector<double> window;
  for (int i = 0; i < 12; ++i) window.push_back(7.0 + 3.0 * std::sin(i * 0.7));
  const auto analytic = OnlineModel::window_gradient(probe, window, 9.0, 7.5);
  const double err = gradcheck::max_relative_error(
      [&](const std::vector<double>& t) {
        GruWeights g = probe;
        g.assign(t);
        return OnlineModel::window_loss(g, window, 9.0, 7.5);
      },
      flat, analytic);
  EXPECT_LE(err, 1e-4);
}

TEST(Recurrent, ConstantWarmupFixedPoint) {
  RecurrentParams p;
  p.window = 10;
  const std::vector<double> warm(40, 9.0);
  auto m = init_online(p, warm, 1);
  EXPECT_NEAR(m.predict_next(), 9.0, 1e-9);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(m.step(9.0), 9.0, 1e-9);
}

TEST(Recurrent, WarmupBoundary) {
  RecurrentParams p;
  p.window = 30;
  EXPECT_THROW(init_online(p, std::vector<double>(30, 1.0), 1), std::invalid_argument);
  EXPECT_NO_THROW(init_online(p, std::vector<double>(31, 1.0), 1));
}

TEST(Recurrent, DeterministicAndSpoofVisible) {
  RecurrentParams p;
  p.window = 10;
  std::vector<double> warm;
  for (int i = 0; i < 60; ++i) warm.push_back(8.0 + std::round(2.0 * std::sin(i * 0.3)));
  auto a = init_online(p, warm, 5), b = init_online(p, warm, 5), c = init_online(p, warm, 5);
  bool differs = false;
  for (int t = 0; t < 10; ++t) {
    const double obs = 8.0 + std::round(2.0 * std::sin((60 + t) * 0.3));
    const double pa = a.step(obs);
    EXPECT_EQ(pa, b.step(obs));
    differs |= c.step(t == 0 ? 0.0 : obs) != pa;
  }
  EXPECT_TRUE(differs);
}

TEST(Distill, FollowsConfidentTeacher) {
  Matrix x, y;
  informative(300, 10, x, y);
  const auto teacher = Model::train(small_forest(TaskKind::classify), x, y);
  const auto student = distill_forest(teacher, x);
  const auto again = distill_forest(teacher, x);
  const auto pt = teacher.predict(x), ps = student.predict(x);
  int agree = 0;
  for (std::size_t r = 0; r < 300; ++r) agree += pt.labels[r] == ps.labels[r];
  EXPECT_GE(agree, 297);
  EXPECT_EQ(ps.scores, again.predict(x).scores);
  EXPECT_THROW(distill_forest(teacher, x, 0.0), std::invalid_argument);
}
