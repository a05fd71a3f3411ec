#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "myopic/common.hpp"

namespace myopic::models {

enum class Kind { forest, feedforward, recurrent };
enum class TaskKind { classify, regress, vector_regress };

std::string kind_name(Kind k);
std::string task_name(TaskKind t);

struct ForestParams {
  int trees = 100;
  int max_depth = 0;         // 0 = unbounded
  int min_samples_leaf = 1;
  int max_features = 0;      // 0 = sqrt(d) for classification, d/3 for regression
  bool bootstrap = true;
};

enum class Activation { relu, tanh, sigmoid };
enum class OutputActivation {
  automatic,       // softmax for classify, identity otherwise
  identity,
  softplus,
  grouped_softmax  // softmax over consecutive blocks of `output_group` outputs
};

struct FeedforwardParams {
  std::vector<int> hidden{32};
  Activation activation = Activation::relu;
  OutputActivation output = OutputActivation::automatic;
  int output_group = 0;
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 1e-2;
  double l2 = 0.0;
};

struct RecurrentParams {
  int hidden = 8;
  int window = 30;
  int epochs = 5;
  double learning_rate = 5e-3;
  double online_learning_rate = 1e-2;
  int online_steps = 1;
  double scale = 7.5;  // input/output normalization span
};

struct ModelSpec {
  Kind kind = Kind::forest;
  TaskKind task = TaskKind::classify;
  ForestParams forest;
  FeedforwardParams feedforward;
  RecurrentParams recurrent;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Fingerprint {
  std::uint64_t data_hash = 0;
  std::uint64_t seed = 0;
  bool operator==(const Fingerprint&) const = default;
};

/// Classification fills labels+scores, regression fills values,
/// vector regression fills vectors.
struct Predictions {
  std::vector<int> labels;
  Matrix scores;
  std::vector<double> values;
  Matrix vectors;
};

struct FeatureImportance {
  std::vector<std::pair<std::string, double>> ranking;  // descending score

  /// The k highest-ranked identifiers (ties broken by schema order).
  std::vector<std::string> top_k(std::size_t k) const;
  double score(const std::string& id) const;
};

// ---------------------------------------------------------------------------
// Random forest (CART trees, Gini / variance reduction, impurity importance).

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int value_offset = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaf_values;  // class distribution or a single mean
  std::vector<double> importance;   // raw weighted impurity decrease per feature

  std::span<const double> leaf_for(std::span<const double> x, std::size_t width) const;
};

class Forest {
 public:
  /// `targets` is n x K soft class masses (one-hot for hard labels) for
  /// classification, n x 1 for regression.
  static Forest fit(const ForestParams& p, bool classification, const Matrix& x, const Matrix& targets,
                    std::uint64_t seed, Exec exec = Exec::parallel);

  /// Class probabilities (n x K) or means (n x 1).
  Matrix predict_raw(const Matrix& x, Exec exec = Exec::parallel) const;
  std::vector<double> importance() const;  // normalized, sums to 1

  bool classification() const { return classification_; }
  std::size_t outputs() const { return outputs_; }
  std::size_t features() const { return features_; }
  const std::vector<Tree>& trees() const { return trees_; }

  // Serialization hooks.
  Forest(bool classification, std::size_t features, std::size_t outputs, std::vector<Tree> trees)
      : classification_(classification), features_(features), outputs_(outputs), trees_(std::move(trees)) {}
  Forest() = default;

 private:
  bool classification_ = true;
  std::size_t features_ = 0;
  std::size_t outputs_ = 0;
  std::vector<Tree> trees_;
};

// ---------------------------------------------------------------------------
// Feedforward network trained with Adam on mini-batches.

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

class Feedforward {
 public:
  /// Builds the architecture with seeded initialization; the output layer
  /// starts at zero so a constant target is a fixed point of training.
  Feedforward(const FeedforwardParams& p, TaskKind task, std::size_t inputs, std::size_t outputs,
              std::uint64_t seed);
  Feedforward() = default;

  static Feedforward fit(const FeedforwardParams& p, TaskKind task, const Matrix& x, const Matrix& targets,
                         std::uint64_t seed);

  /// Output after the output activation, in target units.
  Matrix forward(const Matrix& x, Exec exec = Exec::parallel) const;

  /// Mean loss over the rows (cross-entropy for softmax outputs, half squared
  /// error otherwise) on already-normalized data; used by the gradient check.
  double loss(const Matrix& x, const Matrix& targets) const;
  std::vector<double> gradient(const Matrix& x, const Matrix& targets) const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  std::size_t parameter_count() const;

  /// Input and target standardization learned in fit(); identity by default.
  std::vector<double> in_mean, in_scale, out_mean, out_scale;
  FeedforwardParams params;
  TaskKind task = TaskKind::classify;
  OutputActivation output = OutputActivation::identity;
  std::vector<DenseLayer> layers;

 private:
  void forward_row(std::span<const double> x, std::vector<std::vector<double>>& acts) const;
  void backward_row(const std::vector<std::vector<double>>& acts, std::span<const double> target,
                    std::vector<double>& grad) const;
  double row_loss(std::span<const double> out, std::span<const double> target) const;
  std::vector<double> normalized_input(std::span<const double> x) const;
  std::vector<double> normalized_target(std::span<const double> y) const;
};

// ---------------------------------------------------------------------------
// Uniform trained-model contract.

class Model {
 public:
  /// `targets`: n x 1 labels (classify), n x 1 values (regress) or n x k
  /// vectors (vector_regress). Throws on empty data or shape mismatch.
  static Model train(const ModelSpec& spec, const Matrix& x, const Matrix& targets,
                     std::vector<std::string> schema = {}, Exec exec = Exec::parallel);
  /// Trains a classification forest on soft class targets (n x K).
  static Model train_soft(const ModelSpec& spec, const Matrix& x, const Matrix& soft_targets,
                          std::vector<std::string> schema = {}, Exec exec = Exec::parallel);

  Predictions predict(const Matrix& x, Exec exec = Exec::parallel) const;

  FeatureImportance feature_importance() const;  // forests only

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::string>& schema() const { return schema_; }
  const Fingerprint& fingerprint() const { return fingerprint_; }
  std::size_t classes() const { return classes_; }
  const Forest* forest() const { return std::get_if<Forest>(&impl_); }
  const Feedforward* network() const { return std::get_if<Feedforward>(&impl_); }

  std::string serialize() const;
  static Model deserialize(const std::string& text);

 private:
  ModelSpec spec_;
  std::vector<std::string> schema_;
  Fingerprint fingerprint_;
  std::size_t classes_ = 0;
  std::variant<Forest, Feedforward> impl_;
};

Matrix labels_to_targets(std::span<const int> labels);
Matrix values_to_targets(std::span<const double> values);
std::vector<std::string> default_schema(std::size_t width);

/// Soft-label distillation of a classification forest: the student is a
/// forest of the same spec trained on the teacher's class probabilities
/// (sharpened by 1/temperature) over `x`.
Model distill_forest(const Model& teacher, const Matrix& x, double temperature = 1.0, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Online recurrent next-step regressor.
//
// A gated recurrent cell reads the last `window` reported values, centred on
// their mean and divided by `scale`; the readout predicts the next value's
// offset from that mean. The candidate state and readout carry no bias, so a
// constant history is an exact fixed point.

struct GruWeights {
  std::size_t hidden = 0;
  std::vector<double> wz, uz, bz;  // update gate
  std::vector<double> wr, ur, br;  // reset gate
  std::vector<double> wn, un;      // candidate
  std::vector<double> wo;          // readout

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

class OnlineModel {
 public:
  /// Pre-trains on every (window -> next) pair of the warm-up series.
  /// Throws std::invalid_argument when |warmup| <= window.
  static OnlineModel init(const RecurrentParams& p, std::span<const double> warmup, std::uint64_t seed);

  /// Prediction for the value following the current history.
  double predict_next() const;
  /// Adds an observation as reported, takes the online update steps on it,
  /// and returns the prediction for the following step.
  double step(double observation);

  const std::deque<double>& history() const { return history_; }
  const GruWeights& weights() const { return weights_; }
  const RecurrentParams& params() const { return params_; }

  /// Half squared error (normalized units) for one window -> target pair, and
  /// its analytic gradient w.r.t. the flattened weights.
  static double window_loss(const GruWeights& w, std::span<const double> window, double target, double scale);
  static std::vector<double> window_gradient(const GruWeights& w, std::span<const double> window, double target,
                                             double scale);
  static double window_predict(const GruWeights& w, std::span<const double> window, double scale);
  static GruWeights initial_weights(std::size_t hidden, std::uint64_t seed);

 private:
  RecurrentParams params_;
  GruWeights weights_;
  std::deque<double> history_;
};

OnlineModel init_online(const RecurrentParams& p, std::span<const double> warmup, std::uint64_t seed);
/// Value-semantics form of OnlineModel::step.
std::pair<double, OnlineModel> step_online(OnlineModel model, double observation);

}  // namespace myopic::models
