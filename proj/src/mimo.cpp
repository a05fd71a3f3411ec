#include "myopic/mimo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "myopic/common.hpp"

namespace myopic::mimo {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

MimoTopology MimoTopology::grid(std::uint64_t seed, double cell_size, int per_cell, double min_distance) {
  if (cell_size <= 0.0 || per_cell < 1 || min_distance < 0.0 || min_distance >= cell_size / 2)
    throw std::invalid_argument("MimoTopology::grid: invalid geometry");
  MimoTopology t;
  Rng rng(derive_seed(seed, "mimo/grid"));
  std::uniform_real_distribution<double> u(0.0, cell_size);
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 2; ++col) {
      Cell c{col * cell_size, row * cell_size, (col + 1) * cell_size, (row + 1) * cell_size};
      Point g{c.x0 + cell_size / 2, c.y0 + cell_size / 2};
      const int gi = static_cast<int>(t.gnbs.size());
      t.cells.push_back(c);
      t.gnbs.push_back(g);
      for (int k = 0; k < per_cell; ++k) {
        Point p;
        do {
          p = {c.x0 + u(rng), c.y0 + u(rng)};
        } while (distance(p, g) < min_distance);
        t.ues.push_back(p);
        t.serving.push_back(gi);
      }
    }
  }
  return t;
}

void MimoTopology::validate() const {
  if (gnbs.size() != cells.size() || gnbs.empty()) throw std::invalid_argument("topology: one cell per gNB required");
  if (serving.size() != ues.size()) throw std::invalid_argument("topology: serving list size mismatch");
  std::vector<int> count(gnbs.size(), 0);
  for (std::size_t k = 0; k < ues.size(); ++k) {
    const int g = serving[k];
    if (g < 0 || static_cast<std::size_t>(g) >= gnbs.size()) throw std::invalid_argument("topology: bad serving gNB");
    if (!cells[static_cast<std::size_t>(g)].contains(ues[k]))
      throw std::invalid_argument("topology: UE " + std::to_string(k) + " outside its serving cell");
    ++count[static_cast<std::size_t>(g)];
  }
  for (int c : count)
    if (c != count.front()) throw std::invalid_argument("topology: cells must serve equal numbers of UEs");
  if (budget <= 0.0 || noise <= 0.0 || alpha <= 0.0 || reference_distance <= 0.0)
    throw std::invalid_argument("topology: budget, noise, alpha and reference distance must be positive");
}

int MimoTopology::cell_of(Point p) const {
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (cells[c].contains(p)) return static_cast<int>(c);
  return -1;
}

std::vector<int> MimoTopology::slots() const {
  std::vector<int> slot(ues.size());
  std::vector<int> next(gnbs.size(), 0);
  for (std::size_t k = 0; k < ues.size(); ++k) slot[k] = next[static_cast<std::size_t>(serving[k])]++;
  return slot;
}

double MimoTopology::gain(double d) const { return std::pow(d / reference_distance, -alpha); }

double gnb_power(const MimoTopology& topo, std::span<const double> powers, int g) {
  double s = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k)
    if (topo.serving[k] == g) s += powers[k];
  return s;
}

std::vector<double> spectral_efficiency(const MimoTopology& topo, std::span<const double> powers,
                                        std::span<const Point> positions) {
  const std::size_t n = topo.size();
  if (powers.size() != n || positions.size() != n) throw std::invalid_argument("spectral_efficiency: size mismatch");
  for (double p : powers)
    if (p < 0.0) throw std::invalid_argument("spectral_efficiency: negative power");
  for (std::size_t g = 0; g < topo.gnbs.size(); ++g)
    if (gnb_power(topo, powers, static_cast<int>(g)) > topo.budget * (1.0 + 1e-9))
      throw std::invalid_argument("spectral_efficiency: power budget of gNB " + std::to_string(g) + " exceeded");
  const auto slot = topo.slots();
  std::vector<double> se(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dkk = distance(positions[k], topo.gnbs[static_cast<std::size_t>(topo.serving[k])]);
    if (dkk == 0.0) throw std::invalid_argument("spectral_efficiency: UE co-located with its gNB");
    double interference = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k || slot[j] != slot[k] || topo.serving[j] == topo.serving[k]) continue;
      const double dkj = distance(positions[k], topo.gnbs[static_cast<std::size_t>(topo.serving[j])]);
      if (dkj == 0.0) throw std::invalid_argument("spectral_efficiency: UE co-located with an interfering gNB");
      interference += powers[j] * topo.gain(dkj);
    }
    se[k] = std::log2(1.0 + powers[k] * topo.gain(dkk) / (interference + topo.noise));
  }
  return se;
}

std::vector<double> ground_truth_power(const MimoTopology& topo, std::span<const Point> positions) {
  const std::size_t n = topo.size();
  if (positions.size() != n) throw std::invalid_argument("ground_truth_power: size mismatch");
  std::vector<double> w(n), total(topo.gnbs.size(), 0.0);
  std::vector<int> members(topo.gnbs.size(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto g = static_cast<std::size_t>(topo.serving[k]);
    w[k] = std::pow(distance(positions[k], topo.gnbs[g]), topo.alpha);
    total[g] += w[k];
    ++members[g];
  }
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto g = static_cast<std::size_t>(topo.serving[k]);
    p[k] = total[g] > 0.0 ? topo.budget * w[k] / total[g] : topo.budget / members[g];
  }
  return p;
}

std::vector<double> distance_features(const MimoTopology& topo, std::span<const Point> positions) {
  std::vector<double> f(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const double d = distance(positions[k], topo.gnbs[static_cast<std::size_t>(topo.serving[k])]);
    f[k] = std::log(std::max(d, 1e-3) / topo.reference_distance);
  }
  return f;
}

std::vector<double> normalize_powers(const MimoTopology& topo, std::span<const double> outputs) {
  std::vector<double> p(outputs.begin(), outputs.end());
  for (auto& v : p) v = std::max(v, 0.0);
  for (std::size_t g = 0; g < topo.gnbs.size(); ++g) {
    const double s = gnb_power(topo, p, static_cast<int>(g));
    if (s <= 0.0) continue;
    const double scale = topo.budget / s;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (topo.serving[k] == static_cast<int>(g)) p[k] *= scale;
  }
  return p;
}

}  // namespace myopic::mimo
