#include "myopic/common.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

namespace myopic {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw std::invalid_argument("Matrix::append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> idx) const {
  Matrix out(rows_, idx.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t j = 0; j < idx.size(); ++j) out(r, j) = (*this)(r, idx[j]);
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

std::vector<double> column(const Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
  return out;
}

std::uint64_t data_hash(const Matrix& x, std::span<const double> y) {
  auto bytes = [](const double* p, std::size_t n) {
    return std::string_view(reinterpret_cast<const char*>(p), n * sizeof(double));
  };
  std::uint64_t h = fnv1a(bytes(x.data().data(), x.data().size()));
  h = fnv1a(bytes(y.data(), y.size()), h);
  return splitmix64(h ^ (x.rows() * 1315423911ULL) ^ x.cols());
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> d(0, i - 1);
    std::swap(p[i - 1], p[d(rng)]);
  }
  return p;
}

Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("split_indices: train fraction must be in (0,1)");
  auto p = permutation(n, seed);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(p.begin() + static_cast<std::ptrdiff_t>(n_train), p.end());
  return s;
}

}  // namespace myopic
