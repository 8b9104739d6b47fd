// Copyright 2026 The brt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "models.hpp"

namespace brt {

using detail::CnnModel;
using detail::ForestModel;
using detail::LogisticModel;
using detail::MlpModel;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LR: return "lr";
    case ModelKind::RF: return "rf";
    case ModelKind::MLP: return "mlp";
    case ModelKind::CNN: return "cnn";
  }
  return "lr";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "lr" || text == "LR") return ModelKind::LR;
  if (text == "rf" || text == "RF") return ModelKind::RF;
  if (text == "mlp" || text == "MLP" || text == "dnn" || text == "DNN") return ModelKind::MLP;
  if (text == "cnn" || text == "CNN") return ModelKind::CNN;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(text) + "'");
}

Scaler Scaler::fit(const Mat& x, const std::vector<std::size_t>& rows) {
  Scaler s;
  s.max.assign(static_cast<std::size_t>(x.cols()), 0.0);
  bool first = true;
  for (auto r : rows) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(static_cast<Eigen::Index>(r), j);
      s.max[j] = first ? v : std::max(s.max[j], v);
    }
    first = false;
  }
  return s;
}

Vec Scaler::apply(const Vec& x) const {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i] / divisor(static_cast<std::size_t>(i));
  return out;
}

Split stratified_split(const std::vector<int>& y, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw Error(ErrorCode::InvalidArgument, "test fraction must be in [0, 1)");
  Split split;
  Rng rng(Rng::mix(seed, 0x5b1e));
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) idx.push_back(i);
    }
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset Dataset::build(RepresentationKind kind, std::vector<std::size_t> shape, const std::vector<FeatureVector>& rows,
                       std::vector<int> labels, Split split) {
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels differ in length");
  }
  std::size_t dim = 1;
  for (auto s : shape) dim *= s;
  Dataset d;
  d.kind = kind;
  d.shape = std::move(shape);
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != dim) {
      throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(i) + " has " + std::to_string(rows[i].values.size()) +
                                                " values, expected " + std::to_string(dim));
    }
    for (std::size_t j = 0; j < dim; ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
    d.digests.push_back(rows[i].digest);
  }
  d.y = std::move(labels);
  std::vector<bool> seen(rows.size(), false);
  for (const auto* part : {&split.train, &split.test}) {
    for (auto i : *part) {
      if (i >= rows.size() || seen[i]) throw Error(ErrorCode::InvalidArgument, "split indices overlap or are out of range");
      seen[i] = true;
    }
  }
  d.split = std::move(split);
  d.scaler = Scaler::fit(d.x, d.split.train);
  return d;
}

void Hyperparams::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (rf_trees < 1) throw Error(ErrorCode::InvalidArgument, "rf_trees must be >= 1");
  if (optimizer != "sgd" && optimizer != "adam") throw Error(ErrorCode::InvalidArgument, "optimizer must be sgd or adam");
}

std::array<double, 2> Model::probs(const Vec& x) const {
  const Eigen::Vector2d z = logits(x);
  const double m = z.maxCoeff();
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

Prediction Model::predict(const Vec& x) const {
  check_input(x);
  Prediction p;
  p.probs = probs(x);
  p.label = p.probs[1] > p.probs[0] ? 1 : 0;
  return p;
}

Vec Model::logit_backward(const Vec&, const Eigen::Vector2d&) const {
  throw Error(ErrorCode::NotDifferentiable, std::string(to_string(kind_)) + " models have no input gradient");
}

Vec Model::input_gradient(const Vec& x, int target) const {
  if (!differentiable()) throw Error(ErrorCode::NotDifferentiable, "random forests have no input gradient");
  check_input(x);
  const auto p = probs(x);
  const Eigen::Vector2d up(p[0] - (target == 0 ? 1.0 : 0.0), p[1] - (target == 1 ? 1.0 : 0.0));
  return logit_backward(x, up);
}

std::vector<std::int32_t> Model::activation_pattern(const Vec&) const { return {}; }

void Model::check_input(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) {
    throw Error(ErrorCode::ShapeMismatch,
                "input has " + std::to_string(x.size()) + " values, model expects " + std::to_string(input_dim()));
  }
}

std::pair<std::size_t, std::size_t> cnn_input_shape(RepresentationKind rep, const std::vector<std::size_t>& shape) {
  if (shape.size() == 2) return {shape[0], shape[1]};
  if (shape.size() == 1 && rep == RepresentationKind::CfgAlgorithmic) {
    std::size_t side = 1;
    while (side * side < shape[0]) ++side;
    side = std::max<std::size_t>(side, 4);
    return {side, side};
  }
  throw Error(ErrorCode::ShapeMismatch, "CNN needs a 2-D input; " + std::string(to_string(rep)) + " declares none");
}

std::unique_ptr<Model> make_empty(ModelKind kind, RepresentationKind rep, const std::vector<std::size_t>& shape,
                                  Scaler scaler, const Hyperparams& hp) {
  switch (kind) {
    case ModelKind::LR: {
      const auto n = static_cast<Eigen::Index>(scaler.max.size());
      return std::make_unique<LogisticModel>(rep, std::move(scaler), hp, Vec::Zero(n), 0.0);
    }
    case ModelKind::RF: return std::make_unique<ForestModel>(rep, std::move(scaler), hp, std::vector<ForestModel::Tree>{});
    case ModelKind::MLP: return std::make_unique<MlpModel>(rep, std::move(scaler), hp);
    case ModelKind::CNN: {
      auto [h, w] = cnn_input_shape(rep, shape);
      return std::make_unique<CnnModel>(rep, h, w, std::move(scaler), hp);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

std::unique_ptr<Model> make_logistic(RepresentationKind rep, Scaler scaler, Vec weights, double bias) {
  if (static_cast<std::size_t>(weights.size()) != scaler.max.size()) {
    throw Error(ErrorCode::ShapeMismatch, "weights and scaler differ in length");
  }
  return std::make_unique<LogisticModel>(rep, std::move(scaler), Hyperparams{}, std::move(weights), bias);
}

std::unique_ptr<Model> train(ModelKind kind, const Dataset& data, const Hyperparams& hp) {
  hp.validate();
  if (data.split.train.empty()) throw Error(ErrorCode::SingleClassTraining, "training split is empty");
  bool has[2] = {false, false};
  for (auto i : data.split.train) has[data.y[i] == 1] = true;
  if (!has[0] || !has[1]) throw Error(ErrorCode::SingleClassTraining, "training split holds a single class");
  switch (kind) {
    case ModelKind::LR: return LogisticModel::fit(data, hp);
    case ModelKind::RF: return ForestModel::fit(data, hp);
    case ModelKind::MLP: {
      auto m = std::make_unique<MlpModel>(data.kind, data.scaler, hp);
      m->fit(data);
      return m;
    }
    case ModelKind::CNN: {
      auto [h, w] = cnn_input_shape(data.kind, data.shape);
      auto m = std::make_unique<CnnModel>(data.kind, h, w, data.scaler, hp);
      m->fit(data);
      return m;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

EvalResult evaluate(const Model& model, const Mat& x, const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  EvalResult r;
  for (auto i : rows) {
    const int pred = model.predict(x.row(static_cast<Eigen::Index>(i)).transpose()).label;
    if (y[i] == 1) {
      (pred == 1 ? r.tp : r.fn) += 1;
    } else {
      (pred == 0 ? r.tn : r.fp) += 1;
    }
  }
  r.accuracy = r.total() ? static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total()) : 0.0;
  return r;
}

EvalResult evaluate(const Model& model, const Dataset& data, bool test_split) {
  return evaluate(model, data.x, data.y, test_split ? data.split.test : data.split.train);
}

namespace {

nlohmann::ordered_json hyperparams_json(const Hyperparams& hp) {
  nlohmann::ordered_json j;
  j["epochs"] = hp.epochs;
  j["learning_rate"] = hp.learning_rate;
  j["seed"] = hp.seed;
  j["batch_size"] = hp.batch_size;
  j["optimizer"] = hp.optimizer;
  j["rf_trees"] = hp.rf_trees;
  j["rf_max_depth"] = hp.rf_max_depth ? nlohmann::ordered_json(*hp.rf_max_depth) : nlohmann::ordered_json(nullptr);
  j["rf_bootstrap"] = hp.rf_bootstrap;
  j["mlp_hidden"] = hp.mlp_hidden;
  j["cnn"] = {{"conv1_filters", hp.cnn.conv1_filters},
              {"conv2_filters", hp.cnn.conv2_filters},
              {"kernel", hp.cnn.kernel},
              {"dense", hp.cnn.dense}};
  return j;
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  Hyperparams hp;
  hp.epochs = j.value("epochs", hp.epochs);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.seed = j.value("seed", hp.seed);
  hp.batch_size = j.value("batch_size", hp.batch_size);
  hp.optimizer = j.value("optimizer", hp.optimizer);
  hp.rf_trees = j.value("rf_trees", hp.rf_trees);
  if (j.contains("rf_max_depth") && !j["rf_max_depth"].is_null()) hp.rf_max_depth = j["rf_max_depth"].get<std::size_t>();
  hp.rf_bootstrap = j.value("rf_bootstrap", hp.rf_bootstrap);
  if (j.contains("mlp_hidden")) hp.mlp_hidden = j["mlp_hidden"].get<std::vector<std::size_t>>();
  if (j.contains("cnn")) {
    const auto& c = j["cnn"];
    hp.cnn.conv1_filters = c.value("conv1_filters", hp.cnn.conv1_filters);
    hp.cnn.conv2_filters = c.value("conv2_filters", hp.cnn.conv2_filters);
    hp.cnn.kernel = c.value("kernel", hp.cnn.kernel);
    hp.cnn.dense = c.value("dense", hp.cnn.dense);
  }
  return hp;
}

void put_f64(Bytes& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  append_int<std::uint64_t>(out, bits, true);
}

double get_f64(ByteView in, std::size_t off) {
  const auto bits = load_int<std::uint64_t>(in, off, true);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

Bytes save_model_blob(const Model& model) {
  Bytes out{'M', 'D', 'L', '1'};
  auto tensors = model.parameters();
  tensors.insert(tensors.begin(), model.scaler().max);
  append_int<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()), true);
  for (const auto& t : tensors) {
    append_int<std::uint64_t>(out, t.size(), true);
    for (double v : t) put_f64(out, v);
  }
  return out;
}

std::string model_envelope(const Model& model, const std::vector<std::size_t>& shape) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(model.kind());
  j["representation"] = to_string(model.representation());
  j["shape"] = shape;
  j["seed"] = model.hyperparams().seed;
  j["hyperparams"] = hyperparams_json(model.hyperparams());
  return j.dump(2);
}

std::unique_ptr<Model> load_model(const std::string& envelope_json, ByteView blob) {
  nlohmann::json env;
  try {
    env = nlohmann::json::parse(envelope_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model envelope: ") + e.what());
  }
  if (blob.size() < 8 || std::memcmp(blob.data(), "MDL1", 4) != 0) throw Error(ErrorCode::ParseError, "missing MDL1 magic");
  const auto count = load_int<std::uint32_t>(blob, 4, true);
  std::vector<std::vector<double>> tensors;
  std::size_t off = 8;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto n = load_int<std::uint64_t>(blob, off, true);
    off += 8;
    if (n > (blob.size() - off) / 8) throw Error(ErrorCode::ParseError, "MDL1 tensor overruns the blob");
    std::vector<double> values(n);
    for (auto& v : values) {
      v = get_f64(blob, off);
      off += 8;
    }
    tensors.push_back(std::move(values));
  }
  if (tensors.empty()) throw Error(ErrorCode::ParseError, "MDL1 blob has no scaler tensor");
  Scaler scaler{tensors.front()};
  tensors.erase(tensors.begin());
  try {
    const auto kind = parse_model_kind(env.at("kind").get<std::string>());
    const auto rep = parse_kind(env.at("representation").get<std::string>());
    const auto shape = env.at("shape").get<std::vector<std::size_t>>();
    auto model = make_empty(kind, rep, shape, std::move(scaler), hyperparams_from_json(env.at("hyperparams")));
    model->set_parameters(tensors);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model envelope: ") + e.what());
  }
}

}  // namespace brt
