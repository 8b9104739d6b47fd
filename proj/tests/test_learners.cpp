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

#include <gtest/gtest.h>

#include "brt/learners.hpp"
#include "learner_fixtures.hpp"

namespace brt {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Split, StratifiedDisjointCovering) {
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) y.push_back(i < 120 ? 0 : 1);
  auto s = stratified_split(y, 0.2, 3);
  EXPECT_EQ(s.test.size(), 40u);
  EXPECT_EQ(s.train.size(), 160u);
  std::vector<int> seen(200, 0);
  int test_pos = 0;
  for (auto i : s.train) ++seen[i];
  for (auto i : s.test) {
    ++seen[i];
    test_pos += y[i];
  }
  for (int c : seen) EXPECT_EQ(c, 1);
  EXPECT_EQ(test_pos, 16);
  EXPECT_EQ(stratified_split(y, 0.2, 3).test, s.test);
}

TEST(ScalerTest, TrainOnlyStatistic) {
  auto d = testing::blob_dataset(RepresentationKind::Symbols, {10}, 50, 3, 1.0, 2);
  auto scaler = d.scaler;
  for (auto i : d.split.test) d.x.row(static_cast<Eigen::Index>(i)).setConstant(1e6);
  EXPECT_EQ(Scaler::fit(d.x, d.split.train).max, scaler.max);
  Scaler z{{0.0, 2.0}};
  EXPECT_EQ(z.apply(Vec::Constant(2, 4.0)), Vec((Vec(2) << 4.0, 2.0).finished()));
}

TEST(Logistic, SeparableToyReachesFullTrainAccuracy) {
  // Points sit at distance >= 0.5 on either side of x0 + x1 = 3, so the set
  // is separable with margin 1 by construction.
  Rng rng(5);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int label = i % 2;
    const double t = rng.uniform() * 2.0;
    const double off = (0.5 + rng.uniform()) / std::sqrt(2.0);
    const double sign = label ? 1.0 : -1.0;
    rows.push_back({1.5 + t / std::sqrt(2.0) + sign * off, 1.5 - t / std::sqrt(2.0) + sign * off + 0.0});
    y.push_back(label);
  }
  auto d = testing::make_dataset(RepresentationKind::Segments, {2}, rows, y, 0.0);
  Hyperparams hp;
  hp.epochs = 5000;
  hp.learning_rate = 5.0;
  auto m = train(ModelKind::LR, d, hp);
  auto r = evaluate(*m, d, false);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.fp + r.fn, 0u);
}

TEST(Logistic, ZeroWeightsTieToBenign) {
  auto m = make_logistic(RepresentationKind::Symbols, Scaler{{1, 1, 1}}, Vec::Zero(3), 0.0);
  auto p = m->predict(Vec::Constant(3, 0.7));
  EXPECT_EQ(p.probs[0], 0.5);
  EXPECT_EQ(p.probs[1], 0.5);
  EXPECT_EQ(p.label, 0);
}

TEST(Logistic, GradientIsClosedForm) {
  Vec w(3);
  w << 0.5, -2.0, 1.5;
  auto m = make_logistic(RepresentationKind::Symbols, Scaler{{2.0, 1.0, 0.0}}, w, 0.1);
  Vec x(3);
  x << 1.0, 0.3, 0.2;
  const double z = 0.5 * 0.5 - 2.0 * 0.3 + 1.5 * 0.2 + 0.1;
  const double p = 1.0 / (1.0 + std::exp(-z));
  for (int t : {0, 1}) {
    Vec g = m->input_gradient(x, t);
    EXPECT_NEAR(g[0], (p - t) * 0.5 / 2.0, 1e-12);
    EXPECT_NEAR(g[1], (p - t) * -2.0, 1e-12);
    EXPECT_NEAR(g[2], (p - t) * 1.5, 1e-12);
  }
}

TEST(Forest, SingleStumpFindsThreshold) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({static_cast<double>(i)});
    y.push_back(i >= 17 ? 1 : 0);
  }
  auto d = testing::make_dataset(RepresentationKind::Segments, {1}, rows, y, 0.0);
  Hyperparams hp;
  hp.rf_trees = 1;
  hp.rf_max_depth = 1;
  hp.rf_bootstrap = false;
  auto m = train(ModelKind::RF, d, hp);
  auto params = m->parameters();
  ASSERT_EQ(params.size(), 1u);
  EXPECT_EQ(params[0][0], 0.0);   // split feature
  EXPECT_EQ(params[0][1], 16.5);  // threshold
  EXPECT_EQ(evaluate(*m, d, false).accuracy, 1.0);
  EXPECT_EQ(code_of([&] { m->input_gradient(Vec::Zero(1), 1); }), ErrorCode::NotDifferentiable);
}

TEST(Forest, ProbabilityIsVoteShare) {
  auto d = testing::blob_dataset(RepresentationKind::Sections, {12}, 80, 4, 0.3, 8);
  Hyperparams hp;
  hp.rf_trees = 7;
  hp.seed = 4;
  auto m = train(ModelKind::RF, d, hp);
  const auto trees = m->parameters();
  for (std::size_t r = 0; r < 20; ++r) {
    Vec x = d.row(r);
    int votes = 0;
    for (const auto& t : trees) {
      std::size_t n = 0;
      while (t[5 * n] >= 0) n = static_cast<std::size_t>(x[static_cast<Eigen::Index>(t[5 * n])] <= t[5 * n + 1] ? t[5 * n + 2] : t[5 * n + 3]);
      votes += static_cast<int>(t[5 * n + 4]);
    }
    EXPECT_EQ(m->probs(x)[1], votes / 7.0);
  }
}

TEST(Training, Errors) {
  std::vector<std::vector<double>> rows{{1}, {2}, {3}};
  auto d = testing::make_dataset(RepresentationKind::Segments, {1}, rows, {1, 1, 1}, 0.0);
  EXPECT_EQ(code_of([&] { train(ModelKind::LR, d, {}); }), ErrorCode::SingleClassTraining);
  auto s = testing::blob_dataset(RepresentationKind::Strings, {30}, 20, 2, 1.0, 1);
  EXPECT_EQ(code_of([&] { train(ModelKind::CNN, s, {}); }), ErrorCode::ShapeMismatch);
  auto m = train(ModelKind::LR, s, {});
  EXPECT_EQ(code_of([&] { m->predict(Vec::Zero(5)); }), ErrorCode::ShapeMismatch);
}

TEST(Mlp, SeededTrainingIsBitIdentical) {
  auto d = testing::blob_dataset(RepresentationKind::Hexdump, {40}, 60, 5, 0.5, 3);
  Hyperparams hp;
  hp.seed = 17;
  auto a = train(ModelKind::MLP, d, hp);
  auto b = train(ModelKind::MLP, d, hp);
  EXPECT_EQ(save_model_blob(*a), save_model_blob(*b));
  hp.seed = 18;
  EXPECT_NE(save_model_blob(*train(ModelKind::MLP, d, hp)), save_model_blob(*a));
}

TEST(Mlp, ForwardMatchesHandRolledOracle) {
  auto d = testing::blob_dataset(RepresentationKind::Hexdump, {6}, 40, 2, 0.5, 3);
  Hyperparams hp;
  hp.mlp_hidden = {5, 4};
  auto m = train(ModelKind::MLP, d, hp);
  const auto p = m->parameters();
  Vec x = d.row(3);
  std::vector<double> a(6);
  for (int i = 0; i < 6; ++i) a[i] = x[i] / m->scaler().divisor(i);
  const std::vector<std::size_t> widths{6, 5, 4, 2};
  for (std::size_t l = 0; l < 3; ++l) {
    std::vector<double> z(widths[l + 1]);
    for (std::size_t o = 0; o < widths[l + 1]; ++o) {
      z[o] = p[2 * l + 1][o];
      for (std::size_t i = 0; i < widths[l]; ++i) z[o] += p[2 * l][o * widths[l] + i] * a[i];
      if (l < 2) z[o] = std::max(0.0, z[o]);
    }
    a = z;
  }
  auto z = m->logits(x);
  EXPECT_NEAR(z[0], a[0], 1e-9);
  EXPECT_NEAR(z[1], a[1], 1e-9);
  auto pr = m->predict(x);
  EXPECT_NEAR(pr.probs[0] + pr.probs[1], 1.0, 1e-12);
}

// Direct-loop convolution network with the same parameter layout.
Eigen::Vector2d cnn_oracle(const std::vector<std::vector<double>>& p, const std::vector<double>& in, std::size_t h, std::size_t w,
                           const CnnSpec& c) {
  auto conv = [&](const std::vector<double>& x, std::size_t cin, std::size_t hh, std::size_t ww, const std::vector<double>& k,
                  const std::vector<double>& b, std::size_t cout) {
    std::vector<double> out(cout * hh * ww, 0.0);
    for (std::size_t f = 0; f < cout; ++f) {
      for (std::size_t y = 0; y < hh; ++y) {
        for (std::size_t xx = 0; xx < ww; ++xx) {
          double s = b[f];
          for (std::size_t ch = 0; ch < cin; ++ch) {
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                const long sy = long(y) + dy, sx = long(xx) + dx;
                if (sy < 0 || sx < 0 || sy >= long(hh) || sx >= long(ww)) continue;
                s += k[f * cin * 9 + ch * 9 + (dy + 1) * 3 + (dx + 1)] * x[ch * hh * ww + sy * ww + sx];
              }
            }
          }
          out[f * hh * ww + y * ww + xx] = std::max(0.0, s);
        }
      }
    }
    return out;
  };
  auto pool = [](const std::vector<double>& x, std::size_t ch, std::size_t hh, std::size_t ww) {
    std::vector<double> out;
    for (std::size_t c2 = 0; c2 < ch; ++c2) {
      for (std::size_t y = 0; y + 1 < hh + (hh % 2 ? 0 : 1) && 2 * y + 1 < hh; ++y) {
        for (std::size_t xx = 0; 2 * xx + 1 < ww; ++xx) {
          double m = -1e300;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) m = std::max(m, x[c2 * hh * ww + (2 * y + dy) * ww + 2 * xx + dx]);
          }
          out.push_back(m);
        }
      }
    }
    return out;
  };
  auto a1 = pool(conv(in, 1, h, w, p[0], p[1], c.conv1_filters), c.conv1_filters, h, w);
  auto a2 = pool(conv(a1, c.conv1_filters, h / 2, w / 2, p[2], p[3], c.conv2_filters), c.conv2_filters, h / 2, w / 2);
  std::vector<double> hid(c.dense);
  for (std::size_t o = 0; o < c.dense; ++o) {
    double s = p[5][o];
    for (std::size_t i = 0; i < a2.size(); ++i) s += p[4][o * a2.size() + i] * a2[i];
    hid[o] = std::max(0.0, s);
  }
  Eigen::Vector2d z;
  for (int o = 0; o < 2; ++o) {
    z[o] = p[7][o];
    for (std::size_t i = 0; i < c.dense; ++i) z[o] += p[6][o * c.dense + i] * hid[i];
  }
  return z;
}

TEST(Cnn, ForwardMatchesDirectLoops) {
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{12, 12}, {10, 14}, {9, 11}}) {
    auto d = testing::blob_dataset(RepresentationKind::Image, {h, w}, 30, 10, 0.5, 6);
    Hyperparams hp;
    hp.epochs = 2;
    auto m = train(ModelKind::CNN, d, hp);
    Vec x = d.row(1);
    std::vector<double> s(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) s[i] = x[i] / m->scaler().divisor(i);
    auto want = cnn_oracle(m->parameters(), s, h, w, hp.cnn);
    auto got = m->logits(x);
    EXPECT_NEAR(got[0], want[0], 1e-9) << h << "x" << w;
    EXPECT_NEAR(got[1], want[1], 1e-9) << h << "x" << w;
  }
}

TEST(Gradients, FiniteDifferencesAgree) {
  struct Case {
    ModelKind model;
    RepresentationKind kind;
    std::vector<std::size_t> shape;
  };
  const std::vector<Case> cases{{ModelKind::MLP, RepresentationKind::Strings, {50}},
                                {ModelKind::MLP, RepresentationKind::Combined, {120}},
                                {ModelKind::CNN, RepresentationKind::Image, {16, 16}},
                                {ModelKind::CNN, RepresentationKind::CfgAdjacency, {12, 12}},
                                {ModelKind::CNN, RepresentationKind::CfgAlgorithmic, {23}},
                                {ModelKind::LR, RepresentationKind::Hexdump, {30}}};
  Rng rng(99);
  for (const auto& c : cases) {
    auto d = testing::blob_dataset(c.kind, c.shape, 60, 5, 0.6, 12);
    Hyperparams hp;
    hp.epochs = 3;
    auto m = train(c.model, d, hp);
    std::size_t checked = 0, kinks = 0;
    for (std::size_t s = 0; s < 5; ++s) {
      Vec x = d.row(s);
      for (int t : {0, 1}) {
        auto r = testing::fd_check(*m, x, t, 64, rng);
        EXPECT_LE(r.max_rel_error, 1e-4) << to_string(c.model) << "/" << to_string(c.kind);
        checked += r.checked;
        kinks += r.kinks;
      }
    }
    EXPECT_LE(kinks * 10, checked) << "too many probes straddle a kink for " << to_string(c.model);
  }
}

TEST(Evaluate, RecountAndConstantModel) {
  auto d = testing::blob_dataset(RepresentationKind::Symbols, {10}, 100, 3, 0.4, 21);
  auto m = train(ModelKind::LR, d, {});
  auto r = evaluate(*m, d, true);
  std::size_t correct = 0;
  for (auto i : d.split.test) correct += m->predict(d.row(i)).label == d.y[i];
  EXPECT_EQ(r.tp + r.tn, correct);
  EXPECT_EQ(r.total(), d.split.test.size());
  auto zero = make_logistic(RepresentationKind::Symbols, d.scaler, Vec::Zero(10), -1.0);
  EXPECT_EQ(evaluate(*zero, d, true).accuracy, 0.5);
}

TEST(Serialization, RoundTripPreservesPredictions) {
  auto img = testing::blob_dataset(RepresentationKind::Image, {8, 8}, 40, 8, 0.5, 4);
  auto vec = testing::blob_dataset(RepresentationKind::Strings, {20}, 40, 3, 0.5, 4);
  for (auto kind : {ModelKind::LR, ModelKind::RF, ModelKind::MLP, ModelKind::CNN}) {
    const auto& d = kind == ModelKind::CNN ? img : vec;
    Hyperparams hp;
    hp.epochs = 2;
    hp.rf_trees = 5;
    auto m = train(kind, d, hp);
    auto back = load_model(model_envelope(*m, d.shape), save_model_blob(*m));
    EXPECT_EQ(back->kind(), kind);
    EXPECT_EQ(save_model_blob(*back), save_model_blob(*m));
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(back->probs(d.row(i)), m->probs(d.row(i)));
  }
  Bytes junk{'M', 'D', 'L', '0', 0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { load_model("{}", junk); }), ErrorCode::ParseError);
}

}  // namespace
}  // namespace brt
