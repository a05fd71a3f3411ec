#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "myopic/models.hpp"

namespace myopic::models {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct StepCache {
  double x = 0.0;
  std::vector<double> h_prev, z, r, n, h;
};

std::vector<double> normalize_window(std::span<const double> window, double scale, double& centre) {
  centre = mean(window);
  std::vector<double> xs(window.size());
  for (std::size_t t = 0; t < window.size(); ++t) xs[t] = (window[t] - centre) / scale;
  return xs;
}

double run(const GruWeights& w, const std::vector<double>& xs, std::vector<StepCache>* cache) {
  const std::size_t H = w.hidden;
  std::vector<double> h(H, 0.0);
  for (double x : xs) {
    StepCache c;
    c.x = x;
    c.h_prev = h;
    c.z.resize(H);
    c.r.resize(H);
    c.n.resize(H);
    for (std::size_t i = 0; i < H; ++i) {
      double az = w.wz[i] * x + w.bz[i], ar = w.wr[i] * x + w.br[i];
      for (std::size_t j = 0; j < H; ++j) {
        az += w.uz[i * H + j] * h[j];
        ar += w.ur[i * H + j] * h[j];
      }
      c.z[i] = sigmoid(az);
      c.r[i] = sigmoid(ar);
    }
    for (std::size_t i = 0; i < H; ++i) {
      double an = w.wn[i] * x;
      for (std::size_t j = 0; j < H; ++j) an += w.un[i * H + j] * c.r[j] * h[j];
      c.n[i] = std::tanh(an);
    }
    for (std::size_t i = 0; i < H; ++i) h[i] = (1.0 - c.z[i]) * c.n[i] + c.z[i] * h[i];
    c.h = h;
    if (cache) cache->push_back(std::move(c));
  }
  double y = 0.0;
  for (std::size_t i = 0; i < H; ++i) y += w.wo[i] * h[i];
  return y;
}

}  // namespace

std::vector<double> GruWeights::flatten() const {
  std::vector<double> f;
  for (const auto* v : {&wz, &uz, &bz, &wr, &ur, &br, &wn, &un, &wo}) f.insert(f.end(), v->begin(), v->end());
  return f;
}

void GruWeights::assign(std::span<const double> flat) {
  std::size_t pos = 0;
  for (auto* v : {&wz, &uz, &bz, &wr, &ur, &br, &wn, &un, &wo}) {
    if (pos + v->size() > flat.size()) throw std::invalid_argument("GruWeights::assign: size mismatch");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), v->size(), v->begin());
    pos += v->size();
  }
  if (pos != flat.size()) throw std::invalid_argument("GruWeights::assign: size mismatch");
}

GruWeights OnlineModel::initial_weights(std::size_t hidden, std::uint64_t seed) {
  if (hidden == 0) throw std::invalid_argument("OnlineModel: hidden size must be positive");
  GruWeights w;
  w.hidden = hidden;
  Rng rng(derive_seed(seed, "gru/init"));
  const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u(-a, a);
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = u(rng);
  };
  fill(w.wz, hidden);
  fill(w.uz, hidden * hidden);
  w.bz.assign(hidden, 0.0);
  fill(w.wr, hidden);
  fill(w.ur, hidden * hidden);
  w.br.assign(hidden, 0.0);
  fill(w.wn, hidden);
  fill(w.un, hidden * hidden);
  fill(w.wo, hidden);
  return w;
}

double OnlineModel::window_predict(const GruWeights& w, std::span<const double> window, double scale) {
  double centre = 0.0;
  const auto xs = normalize_window(window, scale, centre);
  return centre + scale * run(w, xs, nullptr);
}

double OnlineModel::window_loss(const GruWeights& w, std::span<const double> window, double target, double scale) {
  double centre = 0.0;
  const auto xs = normalize_window(window, scale, centre);
  const double e = run(w, xs, nullptr) - (target - centre) / scale;
  return 0.5 * e * e;
}

std::vector<double> OnlineModel::window_gradient(const GruWeights& w, std::span<const double> window, double target,
                                                 double scale) {
  const std::size_t H = w.hidden;
  double centre = 0.0;
  const auto xs = normalize_window(window, scale, centre);
  std::vector<StepCache> cache;
  cache.reserve(xs.size());
  const double y = run(w, xs, &cache);
  const double dy = y - (target - centre) / scale;

  GruWeights g;
  g.hidden = H;
  for (auto* v : {&g.wz, &g.bz, &g.wr, &g.br, &g.wn, &g.wo}) v->assign(H, 0.0);
  for (auto* v : {&g.uz, &g.ur, &g.un}) v->assign(H * H, 0.0);

  std::vector<double> dh(H);
  const auto& h_last = cache.empty() ? std::vector<double>(H, 0.0) : cache.back().h;
  for (std::size_t i = 0; i < H; ++i) {
    g.wo[i] = h_last[i] * dy;
    dh[i] = w.wo[i] * dy;
  }
  std::vector<double> dh_prev(H), da_n(H), da_r(H), da_z(H), drh(H);
  for (std::size_t t = cache.size(); t-- > 0;) {
    const auto& c = cache[t];
    for (std::size_t i = 0; i < H; ++i) {
      const double dz = dh[i] * (c.h_prev[i] - c.n[i]);
      const double dn = dh[i] * (1.0 - c.z[i]);
      dh_prev[i] = dh[i] * c.z[i];
      da_n[i] = dn * (1.0 - c.n[i] * c.n[i]);
      da_z[i] = dz * c.z[i] * (1.0 - c.z[i]);
    }
    std::fill(drh.begin(), drh.end(), 0.0);
    for (std::size_t i = 0; i < H; ++i) {
      g.wn[i] += da_n[i] * c.x;
      for (std::size_t j = 0; j < H; ++j) {
        g.un[i * H + j] += da_n[i] * c.r[j] * c.h_prev[j];
        drh[j] += w.un[i * H + j] * da_n[i];
      }
    }
    for (std::size_t j = 0; j < H; ++j) {
      dh_prev[j] += drh[j] * c.r[j];
      da_r[j] = drh[j] * c.h_prev[j] * c.r[j] * (1.0 - c.r[j]);
    }
    for (std::size_t i = 0; i < H; ++i) {
      g.wr[i] += da_r[i] * c.x;
      g.br[i] += da_r[i];
      g.wz[i] += da_z[i] * c.x;
      g.bz[i] += da_z[i];
      for (std::size_t j = 0; j < H; ++j) {
        g.ur[i * H + j] += da_r[i] * c.h_prev[j];
        g.uz[i * H + j] += da_z[i] * c.h_prev[j];
        dh_prev[j] += w.ur[i * H + j] * da_r[i] + w.uz[i * H + j] * da_z[i];
      }
    }
    dh = dh_prev;
  }
  return g.flatten();
}

OnlineModel OnlineModel::init(const RecurrentParams& p, std::span<const double> warmup, std::uint64_t seed) {
  if (p.window < 1 || p.hidden < 1 || p.scale <= 0.0) throw std::invalid_argument("OnlineModel: invalid parameters");
  const auto win = static_cast<std::size_t>(p.window);
  if (warmup.size() <= win) throw std::invalid_argument("OnlineModel: warm-up must be longer than the window");
  OnlineModel m;
  m.params_ = p;
  m.weights_ = initial_weights(static_cast<std::size_t>(p.hidden), seed);

  auto theta = m.weights_.flatten();
  std::vector<double> mo(theta.size(), 0.0), ve(theta.size(), 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;
  const std::size_t pairs = warmup.size() - win;
  for (int e = 0; e < p.epochs; ++e) {
    const auto order = permutation(pairs, derive_seed(seed, "gru/epoch", static_cast<std::uint64_t>(e)));
    for (auto k : order) {
      const auto g = window_gradient(m.weights_, warmup.subspan(k, win), warmup[k + win], p.scale);
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        mo[i] = b1 * mo[i] + (1 - b1) * g[i];
        ve[i] = b2 * ve[i] + (1 - b2) * g[i] * g[i];
        theta[i] -= p.learning_rate * (mo[i] / c1) / (std::sqrt(ve[i] / c2) + eps);
      }
      m.weights_.assign(theta);
    }
  }
  m.history_.assign(warmup.end() - static_cast<std::ptrdiff_t>(win), warmup.end());
  return m;
}

double OnlineModel::predict_next() const {
  const std::vector<double> window(history_.begin(), history_.end());
  return window_predict(weights_, window, params_.scale);
}

double OnlineModel::step(double observation) {
  const std::vector<double> window(history_.begin(), history_.end());
  for (int s = 0; s < params_.online_steps; ++s) {
    const auto g = window_gradient(weights_, window, observation, params_.scale);
    auto theta = weights_.flatten();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= params_.online_learning_rate * g[i];
    weights_.assign(theta);
  }
  history_.push_back(observation);
  history_.pop_front();
  return predict_next();
}

OnlineModel init_online(const RecurrentParams& p, std::span<const double> warmup, std::uint64_t seed) {
  return OnlineModel::init(p, warmup, seed);
}

std::pair<double, OnlineModel> step_online(OnlineModel model, double observation) {
  const double y = model.step(observation);
  return {y, std::move(model)};
}

}  // namespace myopic::models
