#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace myopic::mimo {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

struct Cell {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // axis-aligned square
  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

/// Downlink massive-MIMO layout: one gNB per square cell, UEs served by the
/// gNB of the cell they sit in.
struct MimoTopology {
  std::vector<Point> gnbs;
  std::vector<Cell> cells;
  std::vector<Point> ues;
  std::vector<int> serving;         // gNB index per UE
  double budget = 1.0;              // watts per gNB
  double noise = 1e-3;              // sigma^2, watts
  double alpha = 3.7;               // pathloss exponent
  double reference_distance = 1000.0;  // gain is (d / reference_distance)^-alpha

  /// 2x2 grid of `cell_size` squares, gNBs at the centres, `per_cell` UEs
  /// drawn uniformly in each cell at least `min_distance` from the gNB.
  static MimoTopology grid(std::uint64_t seed, double cell_size = 1000.0, int per_cell = 5,
                           double min_distance = 50.0);

  std::size_t size() const { return ues.size(); }
  /// Throws std::invalid_argument unless every UE sits in its serving cell
  /// and every cell holds the same number of UEs.
  void validate() const;
  /// Index of the cell containing p, or -1.
  int cell_of(Point p) const;
  /// Resource slot of each UE: its rank among the UEs of its cell.
  std::vector<int> slots() const;
  double gain(double d) const;
};

/// SE_k = log2(1 + p_k g(d_kk) / (sum_{j != k, same slot} p_j g(d_kj) + sigma^2)),
/// with d_kj the distance from UE k (at `positions`) to the gNB serving j.
/// Throws std::invalid_argument when a gNB exceeds its budget or d = 0.
std::vector<double> spectral_efficiency(const MimoTopology& topo, std::span<const double> powers,
                                        std::span<const Point> positions);

/// Per gNB, power proportional to d^alpha of each served UE, summing to the budget.
std::vector<double> ground_truth_power(const MimoTopology& topo, std::span<const Point> positions);

/// Model input for a position set: log(d / reference_distance) to the serving gNB per UE.
std::vector<double> distance_features(const MimoTopology& topo, std::span<const Point> positions);

/// Scales each gNB's group of model outputs (shares) so that it sums to at most the budget.
std::vector<double> normalize_powers(const MimoTopology& topo, std::span<const double> outputs);

/// Sum of the powers assigned to UEs served by gNB g.
double gnb_power(const MimoTopology& topo, std::span<const double> powers, int g);

}  // namespace myopic::mimo
