#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "myopic/models.hpp"
#include "myopic/serialize.hpp"

namespace myopic {

void require_known_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + k + "'");
  }
}

namespace models {

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::forest: return "forest";
    case Kind::feedforward: return "feedforward";
    case Kind::recurrent: return "recurrent";
  }
  return "?";
}

std::string task_name(TaskKind t) {
  switch (t) {
    case TaskKind::classify: return "classify";
    case TaskKind::regress: return "regress";
    case TaskKind::vector_regress: return "vector_regress";
  }
  return "?";
}

Kind kind_from_name(const std::string& s) {
  for (auto k : {Kind::forest, Kind::feedforward, Kind::recurrent})
    if (kind_name(k) == s) return k;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

TaskKind task_from_name(const std::string& s) {
  for (auto t : {TaskKind::classify, TaskKind::regress, TaskKind::vector_regress})
    if (task_name(t) == s) return t;
  throw std::invalid_argument("unknown task '" + s + "'");
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from(const std::string& s) {
  for (auto a : {Activation::relu, Activation::tanh, Activation::sigmoid})
    if (s == activation_name(a)) return a;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

const char* output_name(OutputActivation o) {
  switch (o) {
    case OutputActivation::automatic: return "automatic";
    case OutputActivation::identity: return "identity";
    case OutputActivation::softplus: return "softplus";
    case OutputActivation::grouped_softmax: return "grouped_softmax";
  }
  return "?";
}

OutputActivation output_from(const std::string& s) {
  for (auto o : {OutputActivation::automatic, OutputActivation::identity, OutputActivation::softplus,
                 OutputActivation::grouped_softmax})
    if (s == output_name(o)) return o;
  throw std::invalid_argument("unknown output activation '" + s + "'");
}

}  // namespace

Json spec_to_json(const ModelSpec& s) {
  return Json{{"kind", kind_name(s.kind)},
              {"task", task_name(s.task)},
              {"seed", s.seed},
              {"forest",
               {{"trees", s.forest.trees},
                {"max_depth", s.forest.max_depth},
                {"min_samples_leaf", s.forest.min_samples_leaf},
                {"max_features", s.forest.max_features},
                {"bootstrap", s.forest.bootstrap}}},
              {"feedforward",
               {{"hidden", s.feedforward.hidden},
                {"activation", activation_name(s.feedforward.activation)},
                {"output", output_name(s.feedforward.output)},
                {"output_group", s.feedforward.output_group},
                {"epochs", s.feedforward.epochs},
                {"batch_size", s.feedforward.batch_size},
                {"learning_rate", s.feedforward.learning_rate},
                {"l2", s.feedforward.l2}}},
              {"recurrent",
               {{"hidden", s.recurrent.hidden},
                {"window", s.recurrent.window},
                {"epochs", s.recurrent.epochs},
                {"learning_rate", s.recurrent.learning_rate},
                {"online_learning_rate", s.recurrent.online_learning_rate},
                {"online_steps", s.recurrent.online_steps},
                {"scale", s.recurrent.scale}}}};
}

ModelSpec spec_from_json(const Json& j) {
  require_known_keys(j, {"kind", "task", "seed", "forest", "feedforward", "recurrent"}, "model");
  ModelSpec s;
  if (j.contains("kind")) s.kind = kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("task")) s.task = task_from_name(j.at("task").get<std::string>());
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    require_known_keys(f, {"trees", "max_depth", "min_samples_leaf", "max_features", "bootstrap"}, "model.forest");
    s.forest.trees = f.value("trees", s.forest.trees);
    s.forest.max_depth = f.value("max_depth", s.forest.max_depth);
    s.forest.min_samples_leaf = f.value("min_samples_leaf", s.forest.min_samples_leaf);
    s.forest.max_features = f.value("max_features", s.forest.max_features);
    s.forest.bootstrap = f.value("bootstrap", s.forest.bootstrap);
  }
  if (j.contains("feedforward")) {
    const auto& f = j.at("feedforward");
    require_known_keys(f,
                       {"hidden", "activation", "output", "output_group", "epochs", "batch_size", "learning_rate",
                        "l2"},
                       "model.feedforward");
    auto& p = s.feedforward;
    p.hidden = f.value("hidden", p.hidden);
    if (f.contains("activation")) p.activation = activation_from(f.at("activation").get<std::string>());
    if (f.contains("output")) p.output = output_from(f.at("output").get<std::string>());
    p.output_group = f.value("output_group", p.output_group);
    p.epochs = f.value("epochs", p.epochs);
    p.batch_size = f.value("batch_size", p.batch_size);
    p.learning_rate = f.value("learning_rate", p.learning_rate);
    p.l2 = f.value("l2", p.l2);
  }
  if (j.contains("recurrent")) {
    const auto& f = j.at("recurrent");
    require_known_keys(f,
                       {"hidden", "window", "epochs", "learning_rate", "online_learning_rate", "online_steps", "scale"},
                       "model.recurrent");
    auto& p = s.recurrent;
    p.hidden = f.value("hidden", p.hidden);
    p.window = f.value("window", p.window);
    p.epochs = f.value("epochs", p.epochs);
    p.learning_rate = f.value("learning_rate", p.learning_rate);
    p.online_learning_rate = f.value("online_learning_rate", p.online_learning_rate);
    p.online_steps = f.value("online_steps", p.online_steps);
    p.scale = f.value("scale", p.scale);
  }
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (kind == Kind::forest) {
    if (forest.trees < 1) throw std::invalid_argument("forest.trees must be >= 1");
    if (forest.min_samples_leaf < 1) throw std::invalid_argument("forest.min_samples_leaf must be >= 1");
    if (forest.max_depth < 0 || forest.max_features < 0) throw std::invalid_argument("forest limits must be >= 0");
    if (task == TaskKind::vector_regress) throw std::invalid_argument("forest does not support vector_regress");
  } else if (kind == Kind::feedforward) {
    if (feedforward.epochs < 0 || feedforward.batch_size < 1 || feedforward.learning_rate <= 0.0)
      throw std::invalid_argument("invalid feedforward training parameters");
    for (int h : feedforward.hidden)
      if (h < 1) throw std::invalid_argument("feedforward.hidden widths must be >= 1");
  } else {
    if (task != TaskKind::regress) throw std::invalid_argument("recurrent models are next-step regressors");
    if (recurrent.window < 1 || recurrent.hidden < 1 || recurrent.scale <= 0.0 || recurrent.online_steps < 0)
      throw std::invalid_argument("invalid recurrent parameters");
  }
}

std::vector<std::string> FeatureImportance::top_k(std::size_t k) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) out.push_back(ranking[i].first);
  return out;
}

double FeatureImportance::score(const std::string& id) const {
  for (const auto& [name, s] : ranking)
    if (name == id) return s;
  throw std::out_of_range("no importance for '" + id + "'");
}

Matrix labels_to_targets(std::span<const int> labels) {
  Matrix m(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) m(i, 0) = labels[i];
  return m;
}

Matrix values_to_targets(std::span<const double> values) {
  Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return m;
}

std::vector<std::string> default_schema(std::size_t width) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < width; ++i) s.push_back("f" + std::to_string(i));
  return s;
}

namespace {

void check_inputs(const ModelSpec& spec, const Matrix& x, const Matrix& targets, std::vector<std::string>& schema) {
  spec.validate();
  if (spec.kind == Kind::recurrent) throw std::invalid_argument("recurrent models are trained with init_online");
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("training data is empty");
  if (targets.rows() != x.rows()) throw std::invalid_argument("feature/target row count mismatch");
  if (schema.empty()) schema = default_schema(x.cols());
  if (schema.size() != x.cols()) throw std::invalid_argument("schema width does not match the feature matrix");
}

}  // namespace

Model Model::train(const ModelSpec& spec, const Matrix& x, const Matrix& targets, std::vector<std::string> schema,
                   Exec exec) {
  check_inputs(spec, x, targets, schema);
  Model m;
  m.spec_ = spec;
  m.schema_ = std::move(schema);
  m.fingerprint_ = {data_hash(x, targets.data()), spec.seed};
  const std::uint64_t seed = derive_seed(spec.seed, "model");

  if (spec.task == TaskKind::classify) {
    if (targets.cols() != 1) throw std::invalid_argument("classification targets must be one label column");
    int max_label = -1;
    for (double v : targets.data()) {
      if (v < 0 || v != std::floor(v)) throw std::invalid_argument("class labels must be non-negative integers");
      max_label = std::max(max_label, static_cast<int>(v));
    }
    m.classes_ = static_cast<std::size_t>(max_label + 1);
    Matrix soft(x.rows(), m.classes_);
    for (std::size_t r = 0; r < x.rows(); ++r) soft(r, static_cast<std::size_t>(targets(r, 0))) = 1.0;
    if (spec.kind == Kind::forest)
      m.impl_ = Forest::fit(spec.forest, true, x, soft, seed, exec);
    else
      m.impl_ = Feedforward::fit(spec.feedforward, spec.task, x, soft, seed);
    return m;
  }
  if (spec.task == TaskKind::regress && targets.cols() != 1)
    throw std::invalid_argument("regression targets must be one value column");
  if (spec.kind == Kind::forest)
    m.impl_ = Forest::fit(spec.forest, false, x, targets, seed, exec);
  else
    m.impl_ = Feedforward::fit(spec.feedforward, spec.task, x, targets, seed);
  return m;
}

Model Model::train_soft(const ModelSpec& spec, const Matrix& x, const Matrix& soft_targets,
                        std::vector<std::string> schema, Exec exec) {
  check_inputs(spec, x, soft_targets, schema);
  if (spec.kind != Kind::forest || spec.task != TaskKind::classify)
    throw std::invalid_argument("soft-target training needs a classification forest");
  Model m;
  m.spec_ = spec;
  m.schema_ = std::move(schema);
  m.fingerprint_ = {data_hash(x, soft_targets.data()), spec.seed};
  m.classes_ = soft_targets.cols();
  m.impl_ = Forest::fit(spec.forest, true, x, soft_targets, derive_seed(spec.seed, "model"), exec);
  return m;
}

Predictions Model::predict(const Matrix& x, Exec exec) const {
  if (x.cols() != schema_.size()) throw std::invalid_argument("predict: feature count does not match the schema");
  Matrix raw = std::visit(
      [&](const auto& impl) {
        if constexpr (std::is_same_v<std::decay_t<decltype(impl)>, Forest>)
          return impl.predict_raw(x, exec);
        else
          return impl.forward(x, exec);
      },
      impl_);
  Predictions p;
  if (spec_.task == TaskKind::classify) {
    p.labels.resize(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto row = raw.row(r);
      p.labels[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    p.scores = std::move(raw);
  } else if (spec_.task == TaskKind::regress) {
    p.values = raw.data();
  } else {
    p.vectors = std::move(raw);
  }
  return p;
}

FeatureImportance Model::feature_importance() const {
  const auto* f = forest();
  if (!f) throw std::logic_error("feature importance is only defined for forests");
  const auto imp = f->importance();
  std::vector<std::size_t> order(imp.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  FeatureImportance fi;
  for (auto i : order) fi.ranking.emplace_back(schema_[i], imp[i]);
  return fi;
}

namespace {

Json forest_to_json(const Forest& f) {
  Json trees = Json::array();
  for (const auto& t : f.trees()) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value_offset});
    trees.push_back({{"nodes", nodes}, {"leaf_values", t.leaf_values}, {"importance", t.importance}});
  }
  return {{"classification", f.classification()},
          {"features", f.features()},
          {"outputs", f.outputs()},
          {"trees", trees}};
}

Forest forest_from_json(const Json& j) {
  std::vector<Tree> trees;
  for (const auto& jt : j.at("trees")) {
    Tree t;
    for (const auto& n : jt.at("nodes"))
      t.nodes.push_back(TreeNode{n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<int>()});
    t.leaf_values = jt.at("leaf_values").get<std::vector<double>>();
    t.importance = jt.at("importance").get<std::vector<double>>();
    trees.push_back(std::move(t));
  }
  return Forest(j.at("classification").get<bool>(), j.at("features").get<std::size_t>(),
                j.at("outputs").get<std::size_t>(), std::move(trees));
}

Json network_to_json(const Feedforward& n) {
  Json layers = Json::array();
  for (const auto& l : n.layers) layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
  return {{"output", output_name(n.output)}, {"output_group", n.params.output_group},
          {"in_mean", n.in_mean},            {"in_scale", n.in_scale},
          {"out_mean", n.out_mean},          {"out_scale", n.out_scale},
          {"layers", layers}};
}

}  // namespace

std::string Model::serialize() const {
  Json j{{"format", "myopic-model/1"},
         {"spec", spec_to_json(spec_)},
         {"schema", schema_},
         {"fingerprint", {{"data_hash", fingerprint_.data_hash}, {"seed", fingerprint_.seed}}},
         {"classes", classes_}};
  if (const auto* f = forest())
    j["forest"] = forest_to_json(*f);
  else
    j["network"] = network_to_json(*network());
  return j.dump();
}

Model Model::deserialize(const std::string& text) {
  const Json j = Json::parse(text);
  if (j.value("format", "") != "myopic-model/1") throw std::invalid_argument("not a serialized model");
  Model m;
  m.spec_ = spec_from_json(j.at("spec"));
  m.schema_ = j.at("schema").get<std::vector<std::string>>();
  m.fingerprint_ = {j.at("fingerprint").at("data_hash").get<std::uint64_t>(),
                    j.at("fingerprint").at("seed").get<std::uint64_t>()};
  m.classes_ = j.at("classes").get<std::size_t>();
  if (j.contains("forest")) {
    m.impl_ = forest_from_json(j.at("forest"));
  } else {
    const auto& n = j.at("network");
    Feedforward net;
    net.params = m.spec_.feedforward;
    net.task = m.spec_.task;
    net.output = output_from(n.at("output").get<std::string>());
    net.params.output_group = n.at("output_group").get<int>();
    net.in_mean = n.at("in_mean").get<std::vector<double>>();
    net.in_scale = n.at("in_scale").get<std::vector<double>>();
    net.out_mean = n.at("out_mean").get<std::vector<double>>();
    net.out_scale = n.at("out_scale").get<std::vector<double>>();
    for (const auto& l : n.at("layers"))
      net.layers.push_back(DenseLayer{l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                                      l.at("w").get<std::vector<double>>(), l.at("b").get<std::vector<double>>()});
    m.impl_ = std::move(net);
  }
  return m;
}

Model distill_forest(const Model& teacher, const Matrix& x, double temperature, Exec exec) {
  if (temperature <= 0.0) throw std::invalid_argument("distillation temperature must be positive");
  const auto* f = teacher.forest();
  if (!f || !f->classification()) throw std::invalid_argument("distillation needs a classification forest teacher");
  Matrix soft = f->predict_raw(x, exec);
  for (std::size_t r = 0; r < soft.rows(); ++r) {
    auto row = soft.row(r);
    double s = 0.0;
    for (auto& v : row) {
      v = std::pow(v, 1.0 / temperature);
      s += v;
    }
    for (auto& v : row) v = s > 0.0 ? v / s : 1.0 / static_cast<double>(row.size());
  }
  ModelSpec spec = teacher.spec();
  spec.seed = derive_seed(spec.seed, "distill");
  return Model::train_soft(spec, x, soft, teacher.schema(), exec);
}

}  // namespace models
}  // namespace myopic
