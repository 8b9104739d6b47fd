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

#include <memory>
#include <vector>

#include "brt/learners.hpp"
#include "brt/random.hpp"

namespace brt::detail {

class LogisticModel final : public Model {
 public:
  LogisticModel(RepresentationKind rep, Scaler scaler, Hyperparams hp, Vec w, double b);
  static std::unique_ptr<Model> fit(const Dataset& data, const Hyperparams& hp);

  Eigen::Vector2d logits(const Vec& x) const override;
  Vec logit_backward(const Vec& x, const Eigen::Vector2d& upstream) const override;
  std::vector<std::vector<double>> parameters() const override;
  void set_parameters(const std::vector<std::vector<double>>& tensors) override;

  const Vec& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Vec w_;
  double b_;
};

class ForestModel final : public Model {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t label = 0;
  };
  using Tree = std::vector<Node>;

  ForestModel(RepresentationKind rep, Scaler scaler, Hyperparams hp, std::vector<Tree> trees);
  static std::unique_ptr<Model> fit(const Dataset& data, const Hyperparams& hp);

  Eigen::Vector2d logits(const Vec& x) const override;
  std::array<double, 2> probs(const Vec& x) const override;
  std::vector<std::vector<double>> parameters() const override;
  void set_parameters(const std::vector<std::vector<double>>& tensors) override;

  const std::vector<Tree>& trees() const { return trees_; }

 private:
  int tree_vote(const Tree& tree, const Vec& x) const;
  std::vector<Tree> trees_;
};

/// Activations kept from a forward pass for the backward pass.
struct Cache {
  std::vector<Mat> acts;
  std::vector<std::vector<std::int32_t>> argmax;
};

/// Shared machinery for the two gradient-trained networks. Parameters are a
/// flat list of matrices; gradients use the same layout.
class NetModel : public Model {
 public:
  Eigen::Vector2d logits(const Vec& x) const override;
  Vec logit_backward(const Vec& x, const Eigen::Vector2d& upstream) const override;
  std::vector<std::int32_t> activation_pattern(const Vec& x) const override;
  std::vector<std::vector<double>> parameters() const override;
  void set_parameters(const std::vector<std::vector<double>>& tensors) override;

  /// Minibatch training on data.split.train with the configured optimizer.
  void fit(const Dataset& data);

 protected:
  using Model::Model;
  virtual Eigen::Vector2d forward(const Vec& scaled, Cache& cache) const = 0;
  /// Returns d(upstream . logits)/d(scaled input); adds parameter gradients
  /// into `grads` when non-null.
  virtual Vec backward(const Cache& cache, const Eigen::Vector2d& upstream, std::vector<Mat>* grads) const = 0;
  virtual void init(Rng& rng) = 0;
  /// Indices into cache.acts holding pre-activations that pass through ReLU.
  virtual std::vector<std::size_t> relu_inputs() const = 0;

  static void he_init(Mat& w, std::size_t fan_in, Rng& rng);

  std::vector<Mat> params_;
};

class MlpModel final : public NetModel {
 public:
  MlpModel(RepresentationKind rep, Scaler scaler, Hyperparams hp);

 protected:
  Eigen::Vector2d forward(const Vec& scaled, Cache& cache) const override;
  Vec backward(const Cache& cache, const Eigen::Vector2d& upstream, std::vector<Mat>* grads) const override;
  void init(Rng& rng) override;
  std::vector<std::size_t> relu_inputs() const override;

 private:
  std::vector<std::size_t> widths_;  // input, hidden..., 2
};

class CnnModel final : public NetModel {
 public:
  CnnModel(RepresentationKind rep, std::size_t h, std::size_t w, Scaler scaler, Hyperparams hp);

 protected:
  Eigen::Vector2d forward(const Vec& scaled, Cache& cache) const override;
  Vec backward(const Cache& cache, const Eigen::Vector2d& upstream, std::vector<Mat>* grads) const override;
  void init(Rng& rng) override;
  std::vector<std::size_t> relu_inputs() const override { return {1, 3, 5}; }

 private:
  std::size_t h_, w_;
  std::size_t h2_, w2_, h4_, w4_;
};

}  // namespace brt::detail
