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

#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "brt/features.hpp"

namespace brt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ModelKind { LR, RF, MLP, CNN };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Per-feature divisor: the train-split maximum, or 1 where that is <= 0.
struct Scaler {
  std::vector<double> max;

  static Scaler fit(const Mat& x, const std::vector<std::size_t>& rows);
  double divisor(std::size_t i) const { return max[i] > 0.0 ? max[i] : 1.0; }
  Vec apply(const Vec& x) const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split: per class, a seeded shuffle then round(test_fraction*n)
/// samples to test. Index lists come back sorted.
Split stratified_split(const std::vector<int>& y, double test_fraction, std::uint64_t seed);

struct Dataset {
  RepresentationKind kind = RepresentationKind::Image;
  std::vector<std::size_t> shape;  // feature shape of one sample
  Mat x;
  std::vector<int> y;  // 0 benign, 1 malicious
  std::vector<std::string> digests;
  Split split;
  Scaler scaler;

  /// Throws ShapeMismatch when rows and labels disagree.
  static Dataset build(RepresentationKind kind, std::vector<std::size_t> shape, const std::vector<FeatureVector>& rows,
                       std::vector<int> labels, Split split);
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  Vec row(std::size_t i) const { return x.row(static_cast<Eigen::Index>(i)).transpose(); }
};

struct CnnSpec {
  std::size_t conv1_filters = 8;
  std::size_t conv2_filters = 16;
  std::size_t kernel = 3;
  std::size_t dense = 64;
};

struct Hyperparams {
  std::size_t epochs = 10;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  std::string optimizer = "sgd";  // sgd | adam
  std::size_t rf_trees = 100;
  std::optional<std::size_t> rf_max_depth;
  bool rf_bootstrap = true;
  std::vector<std::size_t> mlp_hidden{128, 64};
  CnnSpec cnn;

  void validate() const;
};

struct Prediction {
  int label = 0;
  std::array<double, 2> probs{0.5, 0.5};
};

/// A trained binary classifier. Inputs are raw feature vectors; scaling is
/// internal and gradients are taken with respect to the raw input.
class Model {
 public:
  virtual ~Model() = default;

  ModelKind kind() const noexcept { return kind_; }
  RepresentationKind representation() const noexcept { return representation_; }
  std::size_t input_dim() const noexcept { return scaler_.max.size(); }
  bool differentiable() const noexcept { return kind_ != ModelKind::RF; }
  const Scaler& scaler() const noexcept { return scaler_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }

  /// Pre-softmax scores. RF returns log vote shares.
  virtual Eigen::Vector2d logits(const Vec& x) const = 0;
  virtual std::array<double, 2> probs(const Vec& x) const;
  Prediction predict(const Vec& x) const;

  /// d(upstream . logits)/dx at x. Throws NotDifferentiable for RF.
  virtual Vec logit_backward(const Vec& x, const Eigen::Vector2d& upstream) const;
  /// d CE(softmax(logits(x)), target)/dx.
  Vec input_gradient(const Vec& x, int target) const;

  /// ReLU on/off states and pooling winners at x; empty for models without
  /// piecewise structure. Two inputs with equal patterns lie in the same
  /// linear region.
  virtual std::vector<std::int32_t> activation_pattern(const Vec& x) const;

  /// Flat parameter tensors for serialization.
  virtual std::vector<std::vector<double>> parameters() const = 0;
  virtual void set_parameters(const std::vector<std::vector<double>>& tensors) = 0;

 protected:
  Model(ModelKind kind, RepresentationKind rep, Scaler scaler, Hyperparams hp)
      : kind_(kind), representation_(rep), scaler_(std::move(scaler)), hp_(std::move(hp)) {}
  void check_input(const Vec& x) const;

  ModelKind kind_;
  RepresentationKind representation_;
  Scaler scaler_;
  Hyperparams hp_;
};

/// Trains on dataset.split.train. Throws SingleClassTraining, ShapeMismatch.
std::unique_ptr<Model> train(ModelKind kind, const Dataset& data, const Hyperparams& hp);

/// Logistic regression with explicit parameters (weights act on scaled input).
std::unique_ptr<Model> make_logistic(RepresentationKind rep, Scaler scaler, Vec weights, double bias);

/// Untrained model of the given family shaped for `data`; used to load
/// serialized parameters.
std::unique_ptr<Model> make_empty(ModelKind kind, RepresentationKind rep, const std::vector<std::size_t>& shape,
                                  Scaler scaler, const Hyperparams& hp);

/// 2-D shape the CNN sees for a feature shape; 1-D CFG summaries are laid
/// into the smallest square and zero-padded.
std::pair<std::size_t, std::size_t> cnn_input_shape(RepresentationKind rep, const std::vector<std::size_t>& shape);

struct EvalResult {
  double accuracy = 0.0;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

EvalResult evaluate(const Model& model, const Mat& x, const std::vector<int>& y, const std::vector<std::size_t>& rows);
EvalResult evaluate(const Model& model, const Dataset& data, bool test_split = true);

/// "MDL1" blob + JSON envelope {kind, representation, hyperparams, seed, shape}.
Bytes save_model_blob(const Model& model);
std::string model_envelope(const Model& model, const std::vector<std::size_t>& shape);
std::unique_ptr<Model> load_model(const std::string& envelope_json, ByteView blob);

}  // namespace brt
