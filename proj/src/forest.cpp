#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "myopic/models.hpp"

namespace myopic::models {

std::span<const double> Tree::leaf_for(std::span<const double> x, std::size_t width) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  const auto off = static_cast<std::size_t>(nodes[static_cast<std::size_t>(n)].value_offset);
  return {leaf_values.data() + off, width};
}

namespace {

struct NodeStats {
  double mass = 0.0;
  std::vector<double> cls;  // class masses
  double sum = 0.0, sumsq = 0.0;

  explicit NodeStats(std::size_t k) : cls(k, 0.0) {}

  void add(double w, std::span<const double> t, bool classification) {
    mass += w;
    if (classification) {
      for (std::size_t c = 0; c < cls.size(); ++c) cls[c] += w * t[c];
    } else {
      sum += w * t[0];
      sumsq += w * t[0] * t[0];
    }
  }
  void sub(double w, std::span<const double> t, bool classification) {
    mass -= w;
    if (classification) {
      for (std::size_t c = 0; c < cls.size(); ++c) cls[c] -= w * t[c];
    } else {
      sum -= w * t[0];
      sumsq -= w * t[0] * t[0];
    }
  }
  /// Mass-weighted impurity: M * gini or M * variance.
  double weighted_impurity(bool classification) const {
    if (mass <= 0.0) return 0.0;
    if (classification) {
      double total = 0.0, sq = 0.0;
      for (double m : cls) {
        total += m;
        sq += m * m;
      }
      return total <= 0.0 ? 0.0 : std::max(0.0, total - sq / total);
    }
    return std::max(0.0, sumsq - sum * sum / mass);
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const ForestParams& p, bool classification, const Matrix& x, const Matrix& t, std::size_t mtry,
              std::uint64_t seed)
      : p_(p), cls_(classification), x_(x), t_(t), mtry_(mtry), rng_(seed), feat_order_(x.cols()) {
    std::iota(feat_order_.begin(), feat_order_.end(), std::size_t{0});
    tree_.importance.assign(x.cols(), 0.0);
  }

  Tree build() {
    const std::size_t n = x_.rows();
    weights_.assign(n, p_.bootstrap ? 0.0 : 1.0);
    if (p_.bootstrap) {
      std::uniform_int_distribution<std::size_t> d(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) weights_[d(rng_)] += 1.0;
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (weights_[i] > 0.0) idx.push_back(i);
    NodeStats root = stats(idx, 0, idx.size());
    root_mass_ = root.mass;
    grow(idx, 0, idx.size(), 0, root);
    return std::move(tree_);
  }

 private:
  NodeStats stats(const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) const {
    NodeStats s(t_.cols());
    for (std::size_t k = lo; k < hi; ++k) s.add(weights_[idx[k]], t_.row(idx[k]), cls_);
    return s;
  }

  int make_leaf(const NodeStats& s) {
    TreeNode node;
    node.value_offset = static_cast<int>(tree_.leaf_values.size());
    if (cls_) {
      double total = std::accumulate(s.cls.begin(), s.cls.end(), 0.0);
      for (double m : s.cls) tree_.leaf_values.push_back(total > 0.0 ? m / total : 1.0 / s.cls.size());
    } else {
      tree_.leaf_values.push_back(s.mass > 0.0 ? s.sum / s.mass : 0.0);
    }
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  int grow(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth, const NodeStats& here) {
    const std::size_t count = hi - lo;
    const double parent_imp = here.weighted_impurity(cls_);
    const auto min_leaf = static_cast<std::size_t>(std::max(1, p_.min_samples_leaf));
    if ((p_.max_depth > 0 && depth >= p_.max_depth) || count < 2 * min_leaf || parent_imp <= 1e-12)
      return make_leaf(here);

    // Draw mtry candidate features without replacement.
    const std::size_t d = feat_order_.size();
    for (std::size_t k = 0; k < mtry_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, d - 1);
      std::swap(feat_order_[k], feat_order_[pick(rng_)]);
    }

    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                    idx.begin() + static_cast<std::ptrdiff_t>(hi));
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t f = feat_order_[k];
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      if (x_(sorted.front(), f) == x_(sorted.back(), f)) continue;
      NodeStats left(t_.cols());
      NodeStats right = here;
      for (std::size_t j = 0; j + 1 < count; ++j) {
        const auto i = sorted[j];
        left.add(weights_[i], t_.row(i), cls_);
        right.sub(weights_[i], t_.row(i), cls_);
        const double xv = x_(i, f), xn = x_(sorted[j + 1], f);
        if (xv == xn || j + 1 < min_leaf || count - j - 1 < min_leaf) continue;
        const double gain = parent_imp - left.weighted_impurity(cls_) - right.weighted_impurity(cls_);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = xv + (xn - xv) * 0.5;
          if (best_threshold >= xn) best_threshold = xv;
        }
      }
    }
    if (best_feature < 0) return make_leaf(here);

    const auto f = static_cast<std::size_t>(best_feature);
    auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                        idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                        [&](std::size_t i) { return x_(i, f) <= best_threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    tree_.importance[f] += best_gain / root_mass_;

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{best_feature, best_threshold, -1, -1, 0});
    const NodeStats ls = stats(idx, lo, mid);
    const NodeStats rs = stats(idx, mid, hi);
    const int l = grow(idx, lo, mid, depth + 1, ls);
    const int r = grow(idx, mid, hi, depth + 1, rs);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const ForestParams& p_;
  bool cls_;
  const Matrix& x_;
  const Matrix& t_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::size_t> feat_order_;
  std::vector<double> weights_;
  double root_mass_ = 1.0;
  Tree tree_;
};

}  // namespace

Forest Forest::fit(const ForestParams& p, bool classification, const Matrix& x, const Matrix& targets,
                   std::uint64_t seed, Exec exec) {
  if (x.rows() == 0) throw std::invalid_argument("Forest::fit: empty data");
  if (x.rows() != targets.rows()) throw std::invalid_argument("Forest::fit: shape mismatch");
  if (p.trees < 1) throw std::invalid_argument("Forest::fit: trees must be positive");
  const std::size_t d = x.cols();
  std::size_t mtry = static_cast<std::size_t>(p.max_features);
  if (mtry == 0)
    mtry = classification ? static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(d)))))
                          : std::max<std::size_t>(1, d / 3);
  mtry = std::min(mtry, d);

  std::vector<Tree> trees(static_cast<std::size_t>(p.trees));
  auto build_one = [&](std::size_t t) {
    TreeBuilder b(p, classification, x, targets, mtry, derive_seed(seed, "forest/tree", t));
    trees[t] = b.build();
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(trees.size()); ++t) build_one(static_cast<std::size_t>(t));
  } else {
    for (std::size_t t = 0; t < trees.size(); ++t) build_one(t);
  }
  return Forest(classification, d, targets.cols(), std::move(trees));
}

Matrix Forest::predict_raw(const Matrix& x, Exec exec) const {
  if (x.cols() != features_) throw std::invalid_argument("Forest::predict: feature count mismatch");
  Matrix out(x.rows(), outputs_);
  const double inv = 1.0 / static_cast<double>(trees_.size());
  auto one = [&](std::size_t r) {
    auto row = x.row(r);
    auto dst = out.row(r);
    for (const auto& t : trees_) {
      auto leaf = t.leaf_for(row, outputs_);
      for (std::size_t k = 0; k < outputs_; ++k) dst[k] += leaf[k];
    }
    for (auto& v : dst) v *= inv;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(x.rows()); ++r) one(static_cast<std::size_t>(r));
  } else {
    for (std::size_t r = 0; r < x.rows(); ++r) one(r);
  }
  return out;
}

std::vector<double> Forest::importance() const {
  std::vector<double> imp(features_, 0.0);
  for (const auto& t : trees_)
    for (std::size_t f = 0; f < features_; ++f) imp[f] += t.importance[f];
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total <= 0.0) {
    std::fill(imp.begin(), imp.end(), features_ ? 1.0 / static_cast<double>(features_) : 0.0);
    return imp;
  }
  for (auto& v : imp) v /= total;
  return imp;
}

}  // namespace myopic::models
