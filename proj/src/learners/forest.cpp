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
#include <numeric>

#include "models.hpp"

namespace brt::detail {

namespace {

struct Builder {
  const Mat& x;
  const std::vector<int>& y;
  std::optional<std::size_t> max_depth;
  std::size_t max_features;
  Rng& rng;
  ForestModel::Tree tree;

  static double gini(double n0, double n1) {
    const double n = n0 + n1;
    if (n == 0) return 0.0;
    const double p0 = n0 / n;
    const double p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
  }

  std::int32_t grow(std::vector<std::size_t>& idx, std::size_t depth) {
    const auto node_id = static_cast<std::int32_t>(tree.size());
    tree.emplace_back();
    double n1 = 0;
    for (auto i : idx) n1 += y[i];
    const double n0 = static_cast<double>(idx.size()) - n1;
    tree[node_id].label = n1 > n0 ? 1 : 0;
    if (n0 == 0 || n1 == 0 || idx.size() < 2 || (max_depth && depth >= *max_depth)) return node_id;

    // Visit features in random order until max_features non-constant ones
    // have been scored.
    std::vector<std::size_t> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const double parent = gini(n0, n1);
    double best_gain = 1e-12;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::size_t scored = 0;
    std::vector<std::pair<double, int>> vals(idx.size());
    for (auto f : order) {
      if (scored >= max_features) break;
      for (std::size_t k = 0; k < idx.size(); ++k) vals[k] = {x(static_cast<Eigen::Index>(idx[k]), static_cast<Eigen::Index>(f)), y[idx[k]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;
      ++scored;
      double l0 = 0, l1 = 0;
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        (vals[k].second ? l1 : l0) += 1;
        if (vals[k].first == vals[k + 1].first) continue;
        const double nl = l0 + l1;
        const double nr = static_cast<double>(vals.size()) - nl;
        const double child = (nl * gini(l0, l1) + nr * gini(n0 - l0, n1 - l1)) / static_cast<double>(vals.size());
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = 0.5 * (vals[k].first + vals[k + 1].first);
        }
      }
    }
    if (best_feature < 0) return node_id;
    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    tree[node_id].feature = best_feature;
    tree[node_id].threshold = best_threshold;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    tree[node_id].left = l;
    tree[node_id].right = r;
    return node_id;
  }
};

}  // namespace

ForestModel::ForestModel(RepresentationKind rep, Scaler scaler, Hyperparams hp, std::vector<Tree> trees)
    : Model(ModelKind::RF, rep, std::move(scaler), std::move(hp)), trees_(std::move(trees)) {}

std::unique_ptr<Model> ForestModel::fit(const Dataset& data, const Hyperparams& hp) {
  Rng rng(Rng::mix(hp.seed, 0xf0e57));
  const std::size_t d = data.dim();
  const auto max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  std::vector<Tree> trees;
  for (std::size_t t = 0; t < hp.rf_trees; ++t) {
    std::vector<std::size_t> idx;
    const auto& train = data.split.train;
    if (hp.rf_bootstrap) {
      for (std::size_t k = 0; k < train.size(); ++k) idx.push_back(train[rng.below(train.size())]);
    } else {
      idx = train;
    }
    Builder b{data.x, data.y, hp.rf_max_depth, max_features, rng, {}};
    b.grow(idx, 0);
    trees.push_back(std::move(b.tree));
  }
  return std::make_unique<ForestModel>(data.kind, data.scaler, hp, std::move(trees));
}

int ForestModel::tree_vote(const Tree& tree, const Vec& x) const {
  std::int32_t n = 0;
  while (tree[n].feature >= 0) n = x[tree[n].feature] <= tree[n].threshold ? tree[n].left : tree[n].right;
  return tree[n].label;
}

std::array<double, 2> ForestModel::probs(const Vec& x) const {
  check_input(x);
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += tree_vote(t, x);
  const double p1 = trees_.empty() ? 0.5 : static_cast<double>(votes) / static_cast<double>(trees_.size());
  return {1.0 - p1, p1};
}

Eigen::Vector2d ForestModel::logits(const Vec& x) const {
  const auto p = probs(x);
  return {std::log(std::max(p[0], 1e-12)), std::log(std::max(p[1], 1e-12))};
}

std::vector<std::vector<double>> ForestModel::parameters() const {
  std::vector<std::vector<double>> out;
  for (const auto& t : trees_) {
    std::vector<double> flat;
    for (const auto& n : t) {
      flat.insert(flat.end(), {static_cast<double>(n.feature), n.threshold, static_cast<double>(n.left),
                               static_cast<double>(n.right), static_cast<double>(n.label)});
    }
    out.push_back(std::move(flat));
  }
  return out;
}

void ForestModel::set_parameters(const std::vector<std::vector<double>>& tensors) {
  trees_.clear();
  for (const auto& flat : tensors) {
    if (flat.size() % 5 != 0 || flat.empty()) throw Error(ErrorCode::ShapeMismatch, "tree tensor has the wrong layout");
    Tree t;
    for (std::size_t k = 0; k < flat.size(); k += 5) {
      t.push_back({static_cast<std::int32_t>(flat[k]), flat[k + 1], static_cast<std::int32_t>(flat[k + 2]),
                   static_cast<std::int32_t>(flat[k + 3]), static_cast<std::int32_t>(flat[k + 4])});
    }
    for (const auto& n : t) {
      if (n.feature >= static_cast<std::int32_t>(input_dim()) ||
          (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= static_cast<std::int32_t>(t.size()) ||
                              n.right >= static_cast<std::int32_t>(t.size())))) {
        throw Error(ErrorCode::ShapeMismatch, "tree node references are out of range");
      }
    }
    trees_.push_back(std::move(t));
  }
}

}  // namespace brt::detail
