// Central-difference checks of analytic gradients.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "myopic/common.hpp"
#include "myopic/models.hpp"

namespace gradcheck {

/// Largest relative error |a - n| / max(|a| + |n|, floor) over every parameter.
inline double max_relative_error(const std::function<double(const std::vector<double>&)>& loss,
                                 const std::vector<double>& params, const std::vector<double>& analytic,
                                 double h = 1e-4, double floor = 1e-6) {
  double worst = 0.0;
  auto p = params;
  auto at = [&](std::size_t i, double v) {
    const double orig = p[i];
    p[i] = v;
    const double l = loss(p);
    p[i] = orig;
    return l;
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p[i];
    // fourth-order central stencil
    const double numeric = (8.0 * (at(i, x + h) - at(i, x - h)) - (at(i, x + 2 * h) - at(i, x - 2 * h))) / (12.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(std::abs(analytic[i]) + std::abs(numeric), floor));
  }
  return worst;
}

/// Probe network with every parameter randomized; returns the worst relative error.
inline double feedforward_probe(myopic::models::Activation act, myopic::models::OutputActivation out,
                                myopic::models::TaskKind task, std::uint64_t seed) {
  using namespace myopic;
  models::FeedforwardParams p;
  p.hidden = {6, 5};
  p.activation = act;
  p.output = out;
  p.output_group = 3;
  p.l2 = 1e-3;
  const std::size_t outputs = task == models::TaskKind::classify ? 3 : (out == models::OutputActivation::grouped_softmax ? 6 : 2);
  models::Feedforward net(p, task, 4, outputs, seed);
  auto theta = net.parameters();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = unit_draw(seed, i) - 0.5;
  net.set_parameters(theta);
  Matrix x(7, 4), y(7, outputs);
  for (std::size_t r = 0; r < 7; ++r) {
    for (std::size_t c = 0; c < 4; ++c) x(r, c) = 2.0 * unit_draw(seed + 1, r * 4 + c) - 1.0;
    if (task == models::TaskKind::classify) {
      y(r, r % 3) = 1.0;
    } else if (out == models::OutputActivation::grouped_softmax) {
      for (std::size_t g = 0; g < 2; ++g) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) s += y(r, g * 3 + k) = 0.1 + unit_draw(seed + 2, r * 6 + g * 3 + k);
        for (std::size_t k = 0; k < 3; ++k) y(r, g * 3 + k) /= s;
      }
    } else {
      for (std::size_t c = 0; c < outputs; ++c) y(r, c) = unit_draw(seed + 3, r * 2 + c) * 2.0;
    }
  }
  const auto analytic = net.gradient(x, y);
  auto probe = net;
  return max_relative_error(
      [&](const std::vector<double>& t) {
        probe.set_parameters(t);
        return probe.loss(x, y);
      },
      theta, analytic);
}

}  // namespace gradcheck
