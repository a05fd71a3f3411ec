#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace myopic {

/// Selects between the OpenMP kernel and the serial reference loop. Both
/// paths must produce bit-identical results.
enum class Exec { serial, parallel };

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed fan-out: seed(master, module, index) = splitmix(splitmix(master ^ fnv(module)) + index).
/// Any stage can be re-run in isolation from the master seed alone.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view module, std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a(module)) + index);
}

/// Counter-based uniform draw in [0,1); independent of evaluation order.
inline double unit_draw(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(splitmix64(seed ^ splitmix64(index)) >> 11) * 0x1.0p-53;
}

std::string hex64(std::uint64_t v);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  Matrix select_rows(std::span<const std::size_t> idx) const;
  Matrix select_cols(std::span<const std::size_t> idx) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double mean(std::span<const double> v);
/// Population standard deviation (divides by n).
double population_std(std::span<const double> v);
std::vector<double> column(const Matrix& m, std::size_t c);

/// Hash of the raw bytes of a matrix and a target vector; used as the
/// training fingerprint of a model.
std::uint64_t data_hash(const Matrix& x, std::span<const double> y);

/// Seeded permutation of 0..n-1 (Fisher-Yates over mt19937_64).
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

/// Deterministic train/validation split by seeded permutation.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace myopic
