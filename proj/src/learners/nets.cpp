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

Eigen::Vector2d softmax(const Eigen::Vector2d& z) {
  const double m = z.maxCoeff();
  Eigen::Vector2d e((z.array() - m).exp());
  return e / e.sum();
}

Mat relu(const Mat& z) { return z.cwiseMax(0.0); }

Mat relu_mask(const Mat& g, const Mat& z) { return (z.array() > 0.0).select(g, 0.0); }

// Feature maps are C x (H*W) row-major matrices.
Mat im2col(const Mat& in, std::size_t c, std::size_t h, std::size_t w, std::size_t k) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  Mat cols = Mat::Zero(static_cast<Eigen::Index>(c * k * k), static_cast<Eigen::Index>(h * w));
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto row = static_cast<Eigen::Index>((ch * k + ky) * k + kx);
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(ky) - pad;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t x = 0; x < w; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(kx) - pad;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            cols(row, static_cast<Eigen::Index>(y * w + x)) =
                in(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)));
          }
        }
      }
    }
  }
  return cols;
}

Mat col2im(const Mat& cols, std::size_t c, std::size_t h, std::size_t w, std::size_t k) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(h * w));
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto row = static_cast<Eigen::Index>((ch * k + ky) * k + kx);
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(ky) - pad;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t x = 0; x < w; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(kx) - pad;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            out(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx))) +=
                cols(row, static_cast<Eigen::Index>(y * w + x));
          }
        }
      }
    }
  }
  return out;
}

// 2x2 stride-2 max pooling; odd trailing rows/cols are dropped.
Mat maxpool(const Mat& in, std::size_t h, std::size_t w, std::vector<std::int32_t>& argmax) {
  const std::size_t oh = h / 2, ow = w / 2;
  Mat out(in.rows(), static_cast<Eigen::Index>(oh * ow));
  argmax.assign(static_cast<std::size_t>(in.rows()) * oh * ow, 0);
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * y + dy) * w + 2 * x + dx;
            if (in(c, static_cast<Eigen::Index>(idx)) > in(c, static_cast<Eigen::Index>(best))) best = idx;
          }
        }
        out(c, static_cast<Eigen::Index>(y * ow + x)) = in(c, static_cast<Eigen::Index>(best));
        argmax[static_cast<std::size_t>(c) * oh * ow + y * ow + x] = static_cast<std::int32_t>(best);
      }
    }
  }
  return out;
}

Mat unpool(const Mat& g, std::size_t h, std::size_t w, const std::vector<std::int32_t>& argmax) {
  Mat out = Mat::Zero(g.rows(), static_cast<Eigen::Index>(h * w));
  const auto per = static_cast<std::size_t>(g.cols());
  for (Eigen::Index c = 0; c < g.rows(); ++c) {
    for (std::size_t i = 0; i < per; ++i) out(c, argmax[static_cast<std::size_t>(c) * per + i]) += g(c, static_cast<Eigen::Index>(i));
  }
  return out;
}

Mat as_column(const Vec& v) { return Eigen::Map<const Mat>(v.data(), v.size(), 1); }

}  // namespace

void NetModel::he_init(Mat& w, std::size_t fan_in, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = sd * rng.normal();
}

Eigen::Vector2d NetModel::logits(const Vec& x) const {
  check_input(x);
  Cache cache;
  return forward(scaler_.apply(x), cache);
}

Vec NetModel::logit_backward(const Vec& x, const Eigen::Vector2d& upstream) const {
  check_input(x);
  Cache cache;
  forward(scaler_.apply(x), cache);
  Vec g = backward(cache, upstream, nullptr);
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] /= scaler_.divisor(static_cast<std::size_t>(i));
  return g;
}

std::vector<std::int32_t> NetModel::activation_pattern(const Vec& x) const {
  check_input(x);
  Cache cache;
  forward(scaler_.apply(x), cache);
  std::vector<std::int32_t> out;
  for (auto i : relu_inputs()) {
    const Mat& z = cache.acts[i];
    for (Eigen::Index k = 0; k < z.size(); ++k) out.push_back(z.data()[k] > 0.0 ? 1 : 0);
  }
  for (const auto& a : cache.argmax) out.insert(out.end(), a.begin(), a.end());
  return out;
}

std::vector<std::vector<double>> NetModel::parameters() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : params_) out.emplace_back(p.data(), p.data() + p.size());
  return out;
}

void NetModel::set_parameters(const std::vector<std::vector<double>>& tensors) {
  if (tensors.size() != params_.size()) throw Error(ErrorCode::ShapeMismatch, "network parameter count differs");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (tensors[i].size() != static_cast<std::size_t>(params_[i].size())) {
      throw Error(ErrorCode::ShapeMismatch, "network parameter " + std::to_string(i) + " has the wrong size");
    }
    std::copy(tensors[i].begin(), tensors[i].end(), params_[i].data());
  }
}

void NetModel::fit(const Dataset& data) {
  Rng rng(Rng::mix(hp_.seed, 0x4e7));
  init(rng);
  std::vector<Vec> scaled;
  for (auto i : data.split.train) scaled.push_back(scaler_.apply(data.row(i)));
  std::vector<std::size_t> order(scaled.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<Mat> grads, m, v;
  for (const auto& p : params_) {
    grads.push_back(Mat::Zero(p.rows(), p.cols()));
    m.push_back(Mat::Zero(p.rows(), p.cols()));
    v.push_back(Mat::Zero(p.rows(), p.cols()));
  }
  const bool adam = hp_.optimizer == "adam";
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < hp_.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += hp_.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp_.batch_size);
      for (auto& g : grads) g.setZero();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        Cache cache;
        const Eigen::Vector2d p = softmax(forward(scaled[i], cache));
        const int t = data.y[data.split.train[i]];
        backward(cache, Eigen::Vector2d(p[0] - (t == 0), p[1] - (t == 1)), &grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      ++step;
      for (std::size_t j = 0; j < params_.size(); ++j) {
        grads[j] *= inv;
        if (adam) {
          constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
          m[j] = b1 * m[j] + (1 - b1) * grads[j];
          v[j] = b2 * v[j] + (1 - b2) * grads[j].cwiseProduct(grads[j]);
          const double c1 = 1 - std::pow(b1, static_cast<double>(step));
          const double c2 = 1 - std::pow(b2, static_cast<double>(step));
          params_[j].array() -= hp_.learning_rate * (m[j].array() / c1) / ((v[j].array() / c2).sqrt() + eps);
        } else {
          params_[j] -= hp_.learning_rate * grads[j];
        }
      }
    }
  }
}

MlpModel::MlpModel(RepresentationKind rep, Scaler scaler, Hyperparams hp) : NetModel(ModelKind::MLP, rep, std::move(scaler), std::move(hp)) {
  widths_.push_back(input_dim());
  widths_.insert(widths_.end(), hp_.mlp_hidden.begin(), hp_.mlp_hidden.end());
  widths_.push_back(2);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    params_.push_back(Mat::Zero(static_cast<Eigen::Index>(widths_[l + 1]), static_cast<Eigen::Index>(widths_[l])));
    params_.push_back(Mat::Zero(static_cast<Eigen::Index>(widths_[l + 1]), 1));
  }
}

void MlpModel::init(Rng& rng) {
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    he_init(params_[2 * l], widths_[l], rng);
    params_[2 * l + 1].setZero();
  }
}

std::vector<std::size_t> MlpModel::relu_inputs() const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l + 2 < widths_.size(); ++l) out.push_back(2 * l + 1);
  return out;
}

// acts: [a0, z1, a1, z2, a2, ..., zL]
Eigen::Vector2d MlpModel::forward(const Vec& scaled, Cache& cache) const {
  cache.acts.clear();
  Mat a = as_column(scaled);
  const std::size_t layers = widths_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    cache.acts.push_back(a);
    Mat z = params_[2 * l] * a + params_[2 * l + 1];
    if (l + 1 == layers) {
      cache.acts.push_back(z);
      return {z(0, 0), z(1, 0)};
    }
    cache.acts.push_back(z);
    a = relu(z);
  }
  return {0, 0};
}

Vec MlpModel::backward(const Cache& cache, const Eigen::Vector2d& upstream, std::vector<Mat>* grads) const {
  const std::size_t layers = widths_.size() - 1;
  Mat g(2, 1);
  g << upstream[0], upstream[1];
  for (std::size_t l = layers; l-- > 0;) {
    const Mat& a_in = cache.acts[2 * l];
    if (grads) {
      (*grads)[2 * l] += g * a_in.transpose();
      (*grads)[2 * l + 1] += g;
    }
    g = params_[2 * l].transpose() * g;
    if (l > 0) g = relu_mask(g, cache.acts[2 * l - 1]);
  }
  return Eigen::Map<const Vec>(g.data(), g.rows());
}

CnnModel::CnnModel(RepresentationKind rep, std::size_t h, std::size_t w, Scaler scaler, Hyperparams hp)
    : NetModel(ModelKind::CNN, rep, std::move(scaler), std::move(hp)), h_(h), w_(w) {
  if (h_ < 4 || w_ < 4) throw Error(ErrorCode::ShapeMismatch, "CNN input must be at least 4x4");
  if (input_dim() > h_ * w_) throw Error(ErrorCode::ShapeMismatch, "input does not fit the CNN grid");
  h2_ = h_ / 2;
  w2_ = w_ / 2;
  h4_ = h2_ / 2;
  w4_ = w2_ / 2;
  const auto& c = hp_.cnn;
  const auto k2 = static_cast<Eigen::Index>(c.kernel * c.kernel);
  const auto f1 = static_cast<Eigen::Index>(c.conv1_filters);
  const auto f2 = static_cast<Eigen::Index>(c.conv2_filters);
  const auto flat = static_cast<Eigen::Index>(c.conv2_filters * h4_ * w4_);
  const auto dense = static_cast<Eigen::Index>(c.dense);
  params_ = {Mat::Zero(f1, k2),     Mat::Zero(f1, 1),    Mat::Zero(f2, f1 * k2), Mat::Zero(f2, 1),
             Mat::Zero(dense, flat), Mat::Zero(dense, 1), Mat::Zero(2, dense),    Mat::Zero(2, 1)};
}

void CnnModel::init(Rng& rng) {
  for (std::size_t j = 0; j < params_.size(); j += 2) {
    he_init(params_[j], static_cast<std::size_t>(params_[j].cols()), rng);
    params_[j + 1].setZero();
  }
}

// acts: [cols1, z1, cols2, z2, flat, zd]; argmax: [pool1, pool2]
Eigen::Vector2d CnnModel::forward(const Vec& scaled, Cache& cache) const {
  const std::size_t k = hp_.cnn.kernel;
  Mat img = Mat::Zero(1, static_cast<Eigen::Index>(h_ * w_));
  img.leftCols(scaled.size()) = scaled.transpose();
  cache.acts.assign(6, Mat());
  cache.argmax.assign(2, {});
  cache.acts[0] = im2col(img, 1, h_, w_, k);
  cache.acts[1] = (params_[0] * cache.acts[0]).colwise() + params_[1].col(0);
  const Mat p1 = maxpool(relu(cache.acts[1]), h_, w_, cache.argmax[0]);
  cache.acts[2] = im2col(p1, hp_.cnn.conv1_filters, h2_, w2_, k);
  cache.acts[3] = (params_[2] * cache.acts[2]).colwise() + params_[3].col(0);
  const Mat p2 = maxpool(relu(cache.acts[3]), h2_, w2_, cache.argmax[1]);
  cache.acts[4] = Eigen::Map<const Mat>(p2.data(), p2.size(), 1);
  cache.acts[5] = params_[4] * cache.acts[4] + params_[5];
  const Mat out = params_[6] * relu(cache.acts[5]) + params_[7];
  return {out(0, 0), out(1, 0)};
}

Vec CnnModel::backward(const Cache& cache, const Eigen::Vector2d& upstream, std::vector<Mat>* grads) const {
  const std::size_t k = hp_.cnn.kernel;
  const std::size_t f1 = hp_.cnn.conv1_filters;
  const std::size_t f2 = hp_.cnn.conv2_filters;
  Mat g(2, 1);
  g << upstream[0], upstream[1];
  if (grads) {
    (*grads)[6] += g * relu(cache.acts[5]).transpose();
    (*grads)[7] += g;
  }
  Mat gd = relu_mask(params_[6].transpose() * g, cache.acts[5]);
  if (grads) {
    (*grads)[4] += gd * cache.acts[4].transpose();
    (*grads)[5] += gd;
  }
  Mat gflat = params_[4].transpose() * gd;
  Mat gp2 = Eigen::Map<const Mat>(gflat.data(), static_cast<Eigen::Index>(f2), static_cast<Eigen::Index>(h4_ * w4_));
  Mat gz2 = relu_mask(unpool(gp2, h2_, w2_, cache.argmax[1]), cache.acts[3]);
  if (grads) {
    (*grads)[2] += gz2 * cache.acts[2].transpose();
    (*grads)[3] += gz2.rowwise().sum();
  }
  Mat gp1 = col2im(params_[2].transpose() * gz2, f1, h2_, w2_, k);
  Mat gz1 = relu_mask(unpool(gp1, h_, w_, cache.argmax[0]), cache.acts[1]);
  if (grads) {
    (*grads)[0] += gz1 * cache.acts[0].transpose();
    (*grads)[1] += gz1.rowwise().sum();
  }
  Mat gimg = col2im(params_[0].transpose() * gz1, 1, h_, w_, k);
  Vec out(static_cast<Eigen::Index>(input_dim()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = gimg(0, i);
  return out;
}

}  // namespace brt::detail
