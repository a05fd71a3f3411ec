#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "myopic/models.hpp"

namespace myopic::models {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

void softmax_block(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    s += x;
  }
  for (auto& x : v) x /= s;
}

bool is_softmax(OutputActivation o) { return o == OutputActivation::grouped_softmax; }

}  // namespace

Feedforward::Feedforward(const FeedforwardParams& p, TaskKind t, std::size_t inputs, std::size_t outputs,
                         std::uint64_t seed)
    : params(p), task(t) {
  if (inputs == 0 || outputs == 0) throw std::invalid_argument("Feedforward: empty layer");
  output = p.output;
  if (output == OutputActivation::automatic)
    output = t == TaskKind::classify ? OutputActivation::grouped_softmax : OutputActivation::identity;
  if (output == OutputActivation::grouped_softmax) {
    const auto g = t == TaskKind::classify ? outputs : static_cast<std::size_t>(p.output_group);
    if (g == 0 || outputs % g != 0) throw std::invalid_argument("Feedforward: output_group must divide outputs");
    params.output_group = static_cast<int>(g);
  }
  Rng rng(derive_seed(seed, "ff/init"));
  std::size_t prev = inputs;
  std::vector<std::size_t> widths;
  for (int h : p.hidden) {
    if (h <= 0) throw std::invalid_argument("Feedforward: hidden width must be positive");
    widths.push_back(static_cast<std::size_t>(h));
  }
  widths.push_back(outputs);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    DenseLayer layer{prev, widths[l], std::vector<double>(prev * widths[l], 0.0), std::vector<double>(widths[l], 0.0)};
    if (l + 1 < widths.size()) {
      const double a = std::sqrt(6.0 / static_cast<double>(prev + widths[l]));
      std::uniform_real_distribution<double> u(-a, a);
      for (auto& w : layer.w) w = u(rng);
    }
    layers.push_back(std::move(layer));
    prev = widths[l];
  }
}

std::vector<double> Feedforward::normalized_input(std::span<const double> x) const {
  std::vector<double> v(x.begin(), x.end());
  if (in_mean.size() == v.size())
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - in_mean[i]) / in_scale[i];
  return v;
}

std::vector<double> Feedforward::normalized_target(std::span<const double> y) const {
  std::vector<double> v(y.begin(), y.end());
  if (output == OutputActivation::identity && out_mean.size() == v.size())
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - out_mean[i]) / out_scale[i];
  return v;
}

void Feedforward::forward_row(std::span<const double> x, std::vector<std::vector<double>>& acts) const {
  acts.resize(layers.size() + 1);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    auto& out = acts[l + 1];
    out.assign(L.out, 0.0);
    const auto& in = acts[l];
    for (std::size_t o = 0; o < L.out; ++o) {
      double z = L.b[o];
      const double* w = L.w.data() + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) z += w[i] * in[i];
      out[o] = z;
    }
    if (l + 1 < layers.size()) {
      for (auto& v : out) v = activate(params.activation, v);
    } else if (output == OutputActivation::softplus) {
      for (auto& v : out) v = v > 30.0 ? v : std::log1p(std::exp(v));
    } else if (is_softmax(output)) {
      const auto g = static_cast<std::size_t>(params.output_group);
      for (std::size_t s = 0; s < out.size(); s += g) softmax_block(std::span<double>(out).subspan(s, g));
    }
  }
}

double Feedforward::row_loss(std::span<const double> out, std::span<const double> target) const {
  double loss = 0.0;
  if (is_softmax(output)) {
    for (std::size_t k = 0; k < out.size(); ++k)
      if (target[k] > 0.0) loss -= target[k] * std::log(std::max(out[k], 1e-300));
  } else {
    for (std::size_t k = 0; k < out.size(); ++k) loss += 0.5 * (out[k] - target[k]) * (out[k] - target[k]);
  }
  return loss;
}

void Feedforward::backward_row(const std::vector<std::vector<double>>& acts, std::span<const double> target,
                               std::vector<double>& grad) const {
  // Offsets of each layer's block in the flat parameter vector.
  std::vector<std::size_t> offset(layers.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = pos;
    pos += layers[l].w.size() + layers[l].b.size();
  }
  const auto& y = acts.back();
  std::vector<double> delta(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    delta[k] = y[k] - target[k];
    if (output == OutputActivation::softplus) delta[k] *= 1.0 - std::exp(-y[k]);
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& L = layers[l];
    const auto& in = acts[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + L.w.size();
    for (std::size_t o = 0; o < L.out; ++o) {
      gb[o] += delta[o];
      for (std::size_t i = 0; i < L.in; ++i) gw[o * L.in + i] += delta[o] * in[i];
    }
    if (l == 0) break;
    std::vector<double> prev(L.in, 0.0);
    for (std::size_t o = 0; o < L.out; ++o)
      for (std::size_t i = 0; i < L.in; ++i) prev[i] += L.w[o * L.in + i] * delta[o];
    for (std::size_t i = 0; i < L.in; ++i) prev[i] *= activate_grad(params.activation, in[i]);
    delta = std::move(prev);
  }
}

std::size_t Feedforward::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

std::vector<double> Feedforward::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.w.begin(), l.w.end());
    flat.insert(flat.end(), l.b.begin(), l.b.end());
  }
  return flat;
}

void Feedforward::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("Feedforward: parameter size mismatch");
  std::size_t pos = 0;
  for (auto& l : layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), l.w.size(), l.w.begin());
    pos += l.w.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), l.b.size(), l.b.begin());
    pos += l.b.size();
  }
}

double Feedforward::loss(const Matrix& x, const Matrix& targets) const {
  std::vector<std::vector<double>> acts;
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    forward_row(normalized_input(x.row(r)), acts);
    total += row_loss(acts.back(), normalized_target(targets.row(r)));
  }
  double reg = 0.0;
  for (const auto& l : layers)
    for (double w : l.w) reg += w * w;
  return total / static_cast<double>(x.rows()) + 0.5 * params.l2 * reg;
}

std::vector<double> Feedforward::gradient(const Matrix& x, const Matrix& targets) const {
  std::vector<double> grad(parameter_count(), 0.0);
  std::vector<std::vector<double>> acts;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    forward_row(normalized_input(x.row(r)), acts);
    backward_row(acts, normalized_target(targets.row(r)), grad);
  }
  for (auto& g : grad) g /= static_cast<double>(x.rows());
  std::size_t pos = 0;
  for (const auto& l : layers) {
    for (std::size_t i = 0; i < l.w.size(); ++i) grad[pos + i] += params.l2 * l.w[i];
    pos += l.w.size() + l.b.size();
  }
  return grad;
}

Feedforward Feedforward::fit(const FeedforwardParams& p, TaskKind task, const Matrix& x, const Matrix& targets,
                             std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("Feedforward::fit: empty data");
  if (x.rows() != targets.rows()) throw std::invalid_argument("Feedforward::fit: shape mismatch");
  if (p.epochs < 0 || p.batch_size < 1 || p.learning_rate <= 0.0)
    throw std::invalid_argument("Feedforward::fit: invalid training parameters");
  Feedforward net(p, task, x.cols(), targets.cols(), seed);

  net.in_mean.resize(x.cols());
  net.in_scale.resize(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = column(x, c);
    net.in_mean[c] = mean(col);
    const double s = population_std(col);
    net.in_scale[c] = s > 0.0 ? s : 1.0;
  }
  if (net.output == OutputActivation::identity) {
    net.out_mean.resize(targets.cols());
    net.out_scale.resize(targets.cols());
    for (std::size_t c = 0; c < targets.cols(); ++c) {
      const auto col = column(targets, c);
      net.out_mean[c] = mean(col);
      const double s = population_std(col);
      net.out_scale[c] = s > 0.0 ? s : 1.0;
    }
  }

  // Pre-normalize once.
  const std::size_t n = x.rows();
  std::vector<std::vector<double>> xn(n), yn(n);
  for (std::size_t r = 0; r < n; ++r) {
    xn[r] = net.normalized_input(x.row(r));
    yn[r] = net.normalized_target(targets.row(r));
  }

  auto theta = net.parameters();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad(theta.size());
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> acts;
  const auto bs = static_cast<std::size_t>(p.batch_size);
  for (int e = 0; e < p.epochs; ++e) {
    const auto order = permutation(n, derive_seed(seed, "ff/epoch", static_cast<std::uint64_t>(e)));
    for (std::size_t s = 0; s < n; s += bs) {
      const std::size_t end = std::min(n, s + bs);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = s; k < end; ++k) {
        net.forward_row(xn[order[k]], acts);
        net.backward_row(acts, yn[order[k]], grad);
      }
      const double inv = 1.0 / static_cast<double>(end - s);
      std::size_t pos = 0;
      for (const auto& l : net.layers) {
        for (std::size_t i = 0; i < l.w.size(); ++i) grad[pos + i] = grad[pos + i] * inv + p.l2 * l.w[i];
        for (std::size_t i = 0; i < l.b.size(); ++i) grad[pos + l.w.size() + i] *= inv;
        pos += l.w.size() + l.b.size();
      }
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1 - b1) * grad[i];
        v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
        theta[i] -= p.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
      net.set_parameters(theta);
    }
  }
  return net;
}

Matrix Feedforward::forward(const Matrix& x, Exec exec) const {
  if (layers.empty() || x.cols() != layers.front().in)
    throw std::invalid_argument("Feedforward::forward: feature count mismatch");
  Matrix out(x.rows(), layers.back().out);
  auto one = [&](std::size_t r, std::vector<std::vector<double>>& acts) {
    forward_row(normalized_input(x.row(r)), acts);
    auto dst = out.row(r);
    const auto& y = acts.back();
    for (std::size_t k = 0; k < y.size(); ++k)
      dst[k] = (output == OutputActivation::identity && out_mean.size() == y.size()) ? y[k] * out_scale[k] + out_mean[k]
                                                                                     : y[k];
  };
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      std::vector<std::vector<double>> acts;
#pragma omp for schedule(static)
      for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(x.rows()); ++r) one(static_cast<std::size_t>(r), acts);
    }
  } else {
    std::vector<std::vector<double>> acts;
    for (std::size_t r = 0; r < x.rows(); ++r) one(r, acts);
  }
  return out;
}

}  // namespace myopic::models
