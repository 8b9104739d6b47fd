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

#include <cmath>

#include "models.hpp"

namespace brt::detail {

LogisticModel::LogisticModel(RepresentationKind rep, Scaler scaler, Hyperparams hp, Vec w, double b)
    : Model(ModelKind::LR, rep, std::move(scaler), std::move(hp)), w_(std::move(w)), b_(b) {}

std::unique_ptr<Model> LogisticModel::fit(const Dataset& data, const Hyperparams& hp) {
  const auto& rows = data.split.train;
  const auto n = static_cast<Eigen::Index>(rows.size());
  Mat s(n, static_cast<Eigen::Index>(data.dim()));
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.row(i) = data.scaler.apply(data.row(rows[static_cast<std::size_t>(i)])).transpose();
    y[i] = data.y[rows[static_cast<std::size_t>(i)]];
  }
  Vec w = Vec::Zero(s.cols());
  double b = 0.0;
  for (std::size_t step = 0; step < hp.epochs; ++step) {
    const Vec z = (s * w).array() + b;
    Vec r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = 1.0 / (1.0 + std::exp(-z[i])) - y[i];
    w -= hp.learning_rate * (s.transpose() * r) / static_cast<double>(n);
    b -= hp.learning_rate * r.sum() / static_cast<double>(n);
  }
  return std::make_unique<LogisticModel>(data.kind, data.scaler, hp, std::move(w), b);
}

Eigen::Vector2d LogisticModel::logits(const Vec& x) const {
  check_input(x);
  return {0.0, scaler_.apply(x).dot(w_) + b_};
}

Vec LogisticModel::logit_backward(const Vec& x, const Eigen::Vector2d& upstream) const {
  check_input(x);
  Vec g(w_.size());
  for (Eigen::Index i = 0; i < w_.size(); ++i) g[i] = upstream[1] * w_[i] / scaler_.divisor(static_cast<std::size_t>(i));
  return g;
}

std::vector<std::vector<double>> LogisticModel::parameters() const {
  std::vector<double> w(w_.data(), w_.data() + w_.size());
  return {w, {b_}};
}

void LogisticModel::set_parameters(const std::vector<std::vector<double>>& tensors) {
  if (tensors.size() != 2 || tensors[0].size() != input_dim() || tensors[1].size() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "logistic parameters have the wrong layout");
  }
  w_ = Eigen::Map<const Vec>(tensors[0].data(), static_cast<Eigen::Index>(tensors[0].size()));
  b_ = tensors[1][0];
}

}  // namespace brt::detail
