#include <gtest/gtest.h>

#include <cmath>

#include "myopic/attack.hpp"
#include "myopic/scenarios.hpp"

using namespace myopic;
using namespace myopic::attack;

namespace {

models::Model toy_classifier(Matrix& x, std::vector<double>& y) {
  x = Matrix(200, 3);
  y.assign(200, 0.0);
  Matrix t(200, 1);
  for (std::size_t r = 0; r < 200; ++r) {
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = unit_draw(31, r * 3 + c);
    y[r] = t(r, 0) = x(r, 0) + x(r, 1) > 1.0 ? 1.0 : 0.0;
  }
  models::ModelSpec s;
  s.forest.trees = 15;
  return models::Model::train(s, x, t);
}

}  // namespace

TEST(Inference, IdenticalTwinsNoDegradation) {
  Matrix x;
  std::vector<double> y;
  const auto m = toy_classifier(x, y);
  EvalSet v{x, y, {}};
  const auto r = run_inference_attack(m, v, v, {});
  EXPECT_EQ(r.aggregate.degradation, 0.0);
  EXPECT_EQ(r.aggregate.successes, 0u);
  EXPECT_EQ(r.aggregate.clean, r.aggregate.adversarial);
}

TEST(Inference, MisalignedTwinsThrow) {
  Matrix x;
  std::vector<double> y;
  const auto m = toy_classifier(x, y);
  EvalSet v{x, y, {}};
  const std::vector<std::size_t> half{0, 1, 2};
  EvalSet w{x.select_rows(half), {y[0], y[1], y[2]}, {}};
  EXPECT_THROW(run_inference_attack(m, v, w, {}), std::invalid_argument);
  auto flipped = v;
  flipped.truth[0] = 1.0 - flipped.truth[0];
  EXPECT_THROW(run_inference_attack(m, v, flipped, {}), std::invalid_argument);
}

TEST(Inference, PerGroupDamageIsLocal) {
  Matrix x;
  std::vector<double> y;
  const auto m = toy_classifier(x, y);
  EvalSet v{x, y, {}};
  for (std::size_t r = 0; r < 200; ++r) v.groups.push_back(r < 20 ? "attacker" : "environment");
  auto adv = v;
  for (std::size_t r = 0; r < 20; ++r) adv.x(r, 0) = 1.0 - adv.x(r, 0);
  const auto res = run_inference_attack(m, v, adv, {}, true);
  EXPECT_EQ(res.per_group.at("environment").degradation, 0.0);
  EXPECT_EQ(res.per_group.at("environment").successes, 0u);
  EXPECT_GT(res.per_group.at("attacker").successes, 0u);
}

TEST(Training, RatioZeroControlAndShape) {
  int calls_at_zero = 0;
  auto trial = [&](double ratio, std::uint64_t seed) -> std::vector<double> {
    if (ratio == 0.0) {
#pragma omp atomic
      ++calls_at_zero;
    }
    return {1.0 - ratio, static_cast<double>(seed % 7)};
  };
  const auto curves = run_training_attack(trial, {0.25, 0.5, 0.75, 0.9}, 3, {"Acc", "seedmod"}, 4);
  ASSERT_EQ(curves.size(), 2u);
  ASSERT_EQ(curves[0].points.size(), 5u);
  const std::vector<double> xs{0, 25, 50, 75, 90};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(curves[0].points[i].x, xs[i]);
  EXPECT_EQ(curves[0].points[0].mean, 1.0);
  EXPECT_EQ(curves[0].points[0].std, 0.0);
  EXPECT_EQ(calls_at_zero, 3);
  // the same trial seed is used at every ratio
  for (const auto& p : curves[1].points) EXPECT_EQ(p.mean, curves[1].points[0].mean);
  EXPECT_THROW(run_training_attack(trial, {1.5}, 1, {"Acc", "x"}, 1), std::invalid_argument);
  auto bad = [](double, std::uint64_t) { return std::vector<double>{1.0}; };
  EXPECT_THROW(run_training_attack(bad, {0.5}, 1, {"Acc", "F1"}, 1), std::exception);
}

TEST(Training, SerialEqualsParallel) {
  auto trial = [](double ratio, std::uint64_t seed) { return std::vector<double>{ratio * unit_draw(seed, 0)}; };
  const auto a = run_training_attack(trial, {0.5, 0.9}, 5, {"m"}, 2, Exec::serial);
  const auto b = run_training_attack(trial, {0.5, 0.9}, 5, {"m"}, 2, Exec::parallel);
  EXPECT_EQ(a[0].to_delimited(), b[0].to_delimited());
}

TEST(Online, CumulativeRmse) {
  const std::vector<double> t{1, 1, 1, 1}, p{1, 3, 1, 1};
  const auto c = cumulative_rmse(t, p);
  EXPECT_DOUBLE_EQ(c[0], 0.0);
  EXPECT_DOUBLE_EQ(c[1], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(c[3], 1.0);
}

TEST(Online, NoSpoofZeroDifferential) {
  models::RecurrentParams p;
  p.window = 10;
  const auto s = scenarios::generate_cqi_series(scenarios::Mobility::driving, 1300, 3);
  const auto m = models::init_online(p, std::span(s.cqi).first(600), 1);
  OnlineAttackConfig cfg;
  cfg.mode = SpoofMode::none;
  const auto r = run_online_attack(m, std::span(s.cqi).subspan(600), cfg);
  EXPECT_TRUE(r.spoofed_at.empty());
  for (double d : r.differential) EXPECT_EQ(d, 0.0);
}

TEST(Online, TenSpoofsPerTenMinutes) {
  models::RecurrentParams p;
  p.window = 10;
  const auto s = scenarios::generate_cqi_series(scenarios::Mobility::stationary, 1300, 4);
  const auto m = models::init_online(p, std::span(s.cqi).first(600), 1);
  OnlineAttackConfig cfg;
  const auto r = run_online_attack(m, std::span(s.cqi).subspan(600), cfg);
  EXPECT_EQ(r.spoofed_at.size(), 10u);
  EXPECT_NEAR(10.0 / 600.0, 0.01, 0.007);
  for (auto t : r.spoofed_at) EXPECT_EQ(r.reported[t], 0.0);
  cfg.horizon = 30;
  EXPECT_THROW(run_online_attack(m, std::span(s.cqi).subspan(600), cfg), std::invalid_argument);
}

TEST(Online, JitterRange) {
  OnlineAttackConfig cfg;
  cfg.mode = SpoofMode::jitter;
  cfg.seed = 9;
  for (std::uint64_t k = 0; k < 500; ++k) {
    const double v = spoof_value(7.0, cfg, k);
    EXPECT_NE(v, 7.0);
    EXPECT_LE(std::abs(v - 7.0), 3.0);
    EXPECT_EQ(v, std::round(v));
  }
  EXPECT_GE(spoof_value(0.0, cfg, 1), 0.0);
}

TEST(Positions, SweepProperties) {
  const auto topo = mimo::MimoTopology::grid(3);
  const auto pos = spoof_positions(topo, {4, 14}, 8, 300.0);
  ASSERT_EQ(pos.size(), 9u);
  EXPECT_EQ(pos[0], topo.ues);
  for (std::size_t s = 1; s < pos.size(); ++s)
    for (std::size_t k = 0; k < topo.size(); ++k) {
      if (k == 4 || k == 14) {
        const auto g = topo.gnbs[topo.serving[k]];
        EXPECT_GE(mimo::distance(pos[s][k], g), mimo::distance(pos[s - 1][k], g) - 1e-9);
        EXPECT_TRUE(topo.cells[topo.serving[k]].contains(pos[s][k]));
      } else {
        EXPECT_EQ(pos[s][k], topo.ues[k]);
      }
    }
  const auto far = spoof_positions(topo, {4}, 2, 1e6);
  EXPECT_TRUE(topo.cells[topo.serving[4]].contains(far.back()[4]));
}
