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

#include "brt/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "brt/random.hpp"
#include "brt/transform.hpp"

namespace brt {

namespace {

int label_of(const Eigen::Vector2d& z) { return z[1] > z[0] ? 1 : 0; }

double linf_of(const Vec& d) { return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff(); }

bool unit_domain(RepresentationKind kind) {
  return kind == RepresentationKind::Image || kind == RepresentationKind::CfgAdjacency;
}

struct Candidate {
  Vec x;
  Vec source;
  double linf = std::numeric_limits<double>::infinity();
  double l1 = std::numeric_limits<double>::infinity();
  bool better_than(const Candidate& o) const {
    if (linf != o.linf) return linf < o.linf;
    return l1 < o.l1;
  }
};

class Attack {
 public:
  Attack(const Model& model, const Vec& x, const AttackConfig& cfg, const Discretizer& disc)
      : model_(model), x0_(x), cfg_(cfg), disc_(disc), n_(x.size()), div_(x.size()), upper_(x.size()) {
    for (Eigen::Index i = 0; i < n_; ++i) div_[i] = model.scaler().divisor(static_cast<std::size_t>(i));
    frozen_.assign(static_cast<std::size_t>(n_), false);
    lower_.setConstant(n_, -std::numeric_limits<double>::infinity());
    upper_.setConstant(std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      switch (cfg.constraint) {
        case Constraint::None: break;
        case Constraint::AddOnly:
          lower_[i] = 0.0;
          if (x0_[i] != 0.0) frozen_[ui] = true;
          break;
        case Constraint::AdditiveOnly: lower_[i] = 0.0; break;
        case Constraint::LowerHalf: {
          const auto cols = static_cast<std::size_t>(n_) / cfg.rows;
          if (ui / cols < cfg.rows / 2) frozen_[ui] = true;
          break;
        }
      }
      if (cfg.domain_lo) lower_[i] = std::max(lower_[i], (*cfg.domain_lo - x0_[i]) / div_[i]);
      if (cfg.domain_hi) upper_[i] = std::min(upper_[i], (*cfg.domain_hi - x0_[i]) / div_[i]);
      if (frozen_[ui]) lower_[i] = upper_[i] = 0.0;
    }
  }

  AdversarialResult run() {
    const int t = cfg_.target;
    AdversarialResult out;
    if (label_of(model_.logits(x0_)) == t) {
      out.x_prime = x0_;
      out.source = x0_;
      out.delta = Vec::Zero(n_);
      out.success = true;
      return out;
    }

    Vec warm = Vec::Zero(n_);
    double tau = cfg_.tau_init;
    double c = cfg_.c_init;
    Candidate best;
    Vec closest = x0_;
    double closest_margin = std::numeric_limits<double>::infinity();

    while (used_ < cfg_.max_iters) {
      bool level_ok = false;
      Vec level_delta = warm;
      Vec delta = warm;  // a failed solve hands its iterate to the next c
      for (std::size_t round = 0; round < cfg_.c_search_steps && used_ < cfg_.max_iters; ++round) {
        double solve_linf = std::numeric_limits<double>::infinity();
        Vec m = Vec::Zero(n_), v = Vec::Zero(n_);
        for (std::size_t it = 0; it < cfg_.inner_iters && used_ < cfg_.max_iters; ++it) {
          const Vec xp = x0_ + delta.cwiseProduct(div_);
          const Eigen::Vector2d z = model_.logits(xp);
          const double margin = z[1 - t] - z[t];
          if (margin < closest_margin) {
            closest_margin = margin;
            closest = xp;
          }
          const double excess = (delta.cwiseAbs().array() - tau).max(0.0).sum();
          if (auto cand = accept(xp, label_of(z) == t, best)) {
            solve_linf = std::min(solve_linf, linf_of((cand->x - x0_).cwiseQuotient(div_)));
            if (cand->better_than(best)) best = *cand;
            level_delta = delta;
            if (excess == 0.0) break;
          }

          Vec grad = Vec::Zero(n_);
          if (margin > -cfg_.kappa) {
            Eigen::Vector2d up = Eigen::Vector2d::Zero();
            up[1 - t] = 1.0;
            up[t] = -1.0;
            grad = c * model_.logit_backward(xp, up).cwiseProduct(div_);
          }
          for (Eigen::Index i = 0; i < n_; ++i) {
            if (std::abs(delta[i]) > tau) grad[i] += delta[i] > 0 ? 1.0 : -1.0;
          }
          ++used_;
          const double k = static_cast<double>(it + 1);
          m = 0.9 * m + 0.1 * grad;
          v = 0.999 * v + 0.001 * grad.cwiseAbs2();
          const double b1 = 1.0 - std::pow(0.9, k), b2 = 1.0 - std::pow(0.999, k);
          for (Eigen::Index i = 0; i < n_; ++i) {
            delta[i] -= cfg_.step * (m[i] / b1) / (std::sqrt(v[i] / b2) + 1e-8);
          }
          project(delta);
        }
        if (std::isfinite(solve_linf)) {
          level_ok = true;
          tau = std::min(tau, solve_linf) * cfg_.tau_decay;
          break;
        }
        c *= 10.0;
      }
      if (!level_ok || tau < 1e-9) break;
      warm = level_delta;
    }

    if (std::isfinite(best.linf)) {
      out.x_prime = best.x;
      out.source = best.source;
      out.success = true;
    } else {
      out.x_prime = submit(closest);
      out.source = closest;
      out.success = succeeds(out.x_prime);
    }
    out.delta = out.x_prime - x0_;
    out.linf = linf_of(out.delta);
    out.l1 = out.delta.cwiseAbs().sum();
    out.iters_used = used_;
    return out;
  }

 private:
  void project(Vec& delta) const {
    for (Eigen::Index i = 0; i < n_; ++i) delta[i] = std::clamp(delta[i], lower_[i], upper_[i]);
  }

  bool succeeds(const Vec& xp) const { return label_of(model_.logits(xp)) == cfg_.target; }

  Vec submit(const Vec& xp) const { return disc_ ? disc_(x0_, xp) : xp; }

  // Checks a projected iterate and, when it works, shrinks it toward x0.
  std::optional<Candidate> accept(const Vec& xp, bool continuous_success, const Candidate& best) const {
    Vec point = xp;
    if (disc_) {
      point = disc_(x0_, xp);
      if (!succeeds(point)) return std::nullopt;
    } else if (!continuous_success) {
      return std::nullopt;
    }
    Candidate cand{point, xp, linf_of(point - x0_), (point - x0_).cwiseAbs().sum()};
    if (!cand.better_than(best)) return cand;
    const Vec dir = xp - x0_;
    double lo = 0.0, hi = 1.0;
    for (std::size_t s = 0; s < cfg_.line_search_steps; ++s) {
      const double mid = 0.5 * (lo + hi);
      const Vec p = submit(x0_ + mid * dir);
      if (succeeds(p)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    if (hi < 1.0) {
      const Vec src = x0_ + hi * dir;
      const Vec p = submit(src);
      Candidate shrunk{p, src, linf_of(p - x0_), (p - x0_).cwiseAbs().sum()};
      if (shrunk.better_than(cand) && succeeds(p)) cand = shrunk;
    }
    return cand;
  }

  const Model& model_;
  Vec x0_;
  const AttackConfig& cfg_;
  const Discretizer& disc_;
  Eigen::Index n_;
  Vec div_;
  Vec lower_;
  Vec upper_;
  std::vector<bool> frozen_;
  std::size_t used_ = 0;
};

}  // namespace

std::string_view to_string(NoiseMode mode) { return mode == NoiseMode::Gaussian ? "gaussian" : "uniform-shift"; }

NoiseMode parse_noise_mode(std::string_view text) {
  if (text == "gaussian") return NoiseMode::Gaussian;
  if (text == "uniform-shift" || text == "uniform_shift") return NoiseMode::UniformShift;
  throw Error(ErrorCode::InvalidArgument, "unknown noise mode '" + std::string(text) + "'");
}

Mat gaussian_perturb(const Mat& x, const std::vector<double>& scaler_max, double delta, std::uint64_t seed,
                     NoiseMode mode) {
  if (static_cast<std::size_t>(x.cols()) != scaler_max.size()) {
    throw Error(ErrorCode::ShapeMismatch, "scaler and matrix widths differ");
  }
  if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be non-negative");
  if (delta == 0.0) return x;
  Mat out = x;
  Rng rng(seed);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double g = mode == NoiseMode::Gaussian ? rng.normal() : 1.0;
      out(r, c) += scaler_max[static_cast<std::size_t>(c)] * delta * g;
    }
  }
  return out;
}

std::vector<double> default_deltas() {
  std::vector<double> d;
  for (int i = 1; i <= 100; ++i) d.push_back(i / 100.0);
  return d;
}

NoiseSweep noise_sweep(const Model& model, const Dataset& data, const std::vector<double>& deltas,
                       std::uint64_t seed, NoiseMode mode) {
  if (!std::is_sorted(deltas.begin(), deltas.end())) {
    throw Error(ErrorCode::InvalidArgument, "deltas must be sorted ascending");
  }
  const auto& rows = data.split.test;
  Mat xt(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  std::vector<int> yt;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xt.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(rows[i]));
    yt.push_back(data.y[rows[i]]);
  }
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);

  NoiseSweep sweep;
  sweep.seed = seed;
  sweep.deltas = deltas;
  sweep.baseline = evaluate(model, xt, yt, all).accuracy;
  // One noise draw, scaled per delta.
  const Mat unit = gaussian_perturb(Mat::Zero(xt.rows(), xt.cols()), model.scaler().max, 1.0, seed, mode);
  for (double d : deltas) {
    if (d == 0.0) {
      sweep.accuracy.push_back(sweep.baseline);
      continue;
    }
    const Mat xp = xt + d * unit;
    sweep.accuracy.push_back(evaluate(model, xp, yt, all).accuracy);
  }
  return sweep;
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::None: return "none";
    case Constraint::AddOnly: return "add_only";
    case Constraint::LowerHalf: return "lower_half";
    case Constraint::AdditiveOnly: return "additive_only";
  }
  return "?";
}

Constraint parse_constraint(std::string_view text) {
  for (auto c : {Constraint::None, Constraint::AddOnly, Constraint::LowerHalf, Constraint::AdditiveOnly}) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown constraint '" + std::string(text) + "'");
}

void AttackConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
  if (inner_iters < 1) throw Error(ErrorCode::InvalidArgument, "inner_iters must be at least 1");
  if (!(tau_decay > 0.0 && tau_decay < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau_decay must lie in (0,1)");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!(tau_init > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau_init must be positive");
  if (!(c_init > 0.0)) throw Error(ErrorCode::InvalidArgument, "c_init must be positive");
  if (c_search_steps < 1) throw Error(ErrorCode::InvalidArgument, "c_search_steps must be at least 1");
  if (target != 0 && target != 1) throw Error(ErrorCode::InvalidArgument, "target must be 0 or 1");
  if (constraint == Constraint::LowerHalf && (rows == 0 || rows % 2 != 0)) {
    throw Error(ErrorCode::OddImageHeight, "lower_half needs an even row count");
  }
}

AdversarialResult cw_linf(const Model& model, const Vec& x, const AttackConfig& config, const Discretizer& discretize) {
  config.validate();
  if (!model.differentiable()) throw Error(ErrorCode::NotDifferentiable, "cw_linf needs a differentiable model");
  if (static_cast<std::size_t>(x.size()) != model.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "input does not match the model");
  }
  AttackConfig cfg = config;
  if (unit_domain(model.representation())) {
    if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0)) {
      throw Error(ErrorCode::DomainViolation, "input lies outside [0,1]");
    }
    if (!cfg.domain_lo) cfg.domain_lo = 0.0;
    if (!cfg.domain_hi) cfg.domain_hi = 1.0;
  }
  if (cfg.constraint == Constraint::LowerHalf && static_cast<std::size_t>(x.size()) % cfg.rows != 0) {
    throw Error(ErrorCode::ShapeMismatch, "input size is not a multiple of the row count");
  }
  Attack attack(model, x, cfg, discretize);
  return attack.run();
}

bool satisfies_constraint(const Vec& x, const Vec& x_prime, const AttackConfig& config, double tol) {
  if (x.size() != x_prime.size()) return false;
  const std::size_t n = static_cast<std::size_t>(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double d = x_prime[k] - x[k];
    switch (config.constraint) {
      case Constraint::None: break;
      case Constraint::AddOnly:
        if (d < -tol || (x[k] != 0.0 && std::abs(d) > tol)) return false;
        break;
      case Constraint::AdditiveOnly:
        if (d < -tol) return false;
        break;
      case Constraint::LowerHalf:
        if (i / (n / config.rows) < config.rows / 2 && std::abs(d) > tol) return false;
        break;
    }
    if (config.domain_lo && x_prime[k] < *config.domain_lo - tol) return false;
    if (config.domain_hi && x_prime[k] > *config.domain_hi + tol) return false;
  }
  return true;
}

GraphAttackResult graph_attack(const Model& model, const AdjacencyMatrix& adj, AttackConfig config) {
  if (model.representation() != RepresentationKind::CfgAdjacency) {
    throw Error(ErrorCode::ShapeMismatch, "graph_attack needs a cfg_adjacency model");
  }
  config.constraint = Constraint::AddOnly;
  Vec x(static_cast<Eigen::Index>(adj.cells.size()));
  for (std::size_t i = 0; i < adj.cells.size(); ++i) x[static_cast<Eigen::Index>(i)] = adj.cells[i];
  const Discretizer binarize = [](const Vec& x0, const Vec& cand) {
    Vec out = x0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      if (x0[i] == 0.0 && cand[i] >= 0.5) out[i] = 1.0;
    }
    return out;
  };
  GraphAttackResult r;
  r.result = cw_linf(model, x, config, binarize);
  r.perturbed = adj;
  for (std::size_t i = 0; i < adj.cells.size(); ++i) {
    r.perturbed.cells[i] = r.result.x_prime[static_cast<Eigen::Index>(i)] >= 0.5 ? 1 : 0;
  }
  return r;
}

AdversarialResult string_attack(const Model& model, const FeatureVector& bow, AttackConfig config) {
  config.constraint = Constraint::AdditiveOnly;
  const Vec x = Eigen::Map<const Vec>(bow.values.data(), static_cast<Eigen::Index>(bow.values.size()));
  const int t = config.target;
  const Discretizer round_counts = [&model, t](const Vec& x0, const Vec& cand) {
    Vec floor_pt = x0;
    std::vector<Eigen::Index> frac;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      const double c = std::max(cand[i], x0[i]);
      floor_pt[i] = std::floor(c);
      if (c > floor_pt[i]) frac.push_back(i);
    }
    Eigen::Vector2d z = model.logits(floor_pt);
    if (label_of(z) == t || frac.empty()) return floor_pt;
    Eigen::Vector2d up = Eigen::Vector2d::Zero();
    up[t] = 1.0;
    up[1 - t] = -1.0;
    const Vec g = model.logit_backward(floor_pt, up);
    std::stable_sort(frac.begin(), frac.end(), [&g](Eigen::Index a, Eigen::Index b) { return g[a] > g[b]; });
    Vec out = floor_pt;
    for (Eigen::Index i : frac) {
      if (g[i] <= 0.0) break;
      out[i] += 1.0;
      if (label_of(model.logits(out)) == t) return out;
    }
    return floor_pt;
  };
  return cw_linf(model, x, config, round_counts);
}

Bytes image_to_tail(const std::vector<double>& image, const ImageSpec& spec, std::size_t original_size) {
  spec.validate();
  if (image.size() != spec.h * spec.w) throw Error(ErrorCode::ShapeMismatch, "image does not match the spec");
  const std::size_t total = 2 * original_size;
  const std::size_t gw = image_layout_width(total);
  const std::size_t gh = (total + gw - 1) / gw;
  const double h = static_cast<double>(spec.h), w = static_cast<double>(spec.w);
  Bytes tail(original_size);
  for (std::size_t k = 0; k < original_size; ++k) {
    const std::size_t pos = original_size + k;
    const double gr = static_cast<double>(pos / gw), gc = static_cast<double>(pos % gw);
    double y = (gr + 0.5) * h / static_cast<double>(gh) - 0.5;
    double xc = (gc + 0.5) * w / static_cast<double>(gw) - 0.5;
    y = std::clamp(y, h / 2.0, h - 1.0);
    xc = std::clamp(xc, 0.0, w - 1.0);
    const auto y0 = static_cast<std::size_t>(std::floor(y)), x0 = static_cast<std::size_t>(std::floor(xc));
    const std::size_t y1 = std::min(y0 + 1, spec.h - 1), x1 = std::min(x0 + 1, spec.w - 1);
    const double fy = y - static_cast<double>(y0), fx = xc - static_cast<double>(x0);
    const double top = image[y0 * spec.w + x0] * (1 - fx) + image[y0 * spec.w + x1] * fx;
    const double bottom = image[y1 * spec.w + x0] * (1 - fx) + image[y1 * spec.w + x1] * fx;
    const double v = (top * (1 - fy) + bottom * fy) * 255.0;
    tail[k] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
  return tail;
}

PaddingAttackResult padding_attack(const Model& cnn, const RawBinary& raw, const ImageSpec& spec,
                                   AttackConfig config) {
  spec.validate();
  if (cnn.representation() != RepresentationKind::Image) {
    throw Error(ErrorCode::ShapeMismatch, "padding_attack needs an image model");
  }
  if (raw.size() == 0) throw Error(ErrorCode::EmptyFile, "cannot pad an empty file");
  config.constraint = Constraint::LowerHalf;
  config.rows = spec.h;
  const std::size_t z = raw.size();

  const RawBinary blank = pad_binary(raw, Bytes(z, 0));
  const FeatureVector tmpl = to_image(blank, spec);
  const Vec x = Eigen::Map<const Vec>(tmpl.values.data(), static_cast<Eigen::Index>(tmpl.values.size()));

  auto render = [&](const Vec& cand) {
    const std::vector<double> img(cand.data(), cand.data() + cand.size());
    return pad_binary(raw, image_to_tail(img, spec, z));
  };
  const Discretizer realize = [&](const Vec&, const Vec& cand) {
    const FeatureVector f = to_image(render(cand), spec);
    return Vec(Eigen::Map<const Vec>(f.values.data(), static_cast<Eigen::Index>(f.values.size())));
  };

  PaddingAttackResult out;
  AdversarialResult r = cw_linf(cnn, x, config, realize);
  out.binary = render(r.source).with_lineage(Lineage::Padded);
  const FeatureVector actual = to_image(out.binary, spec);
  r.x_prime = Eigen::Map<const Vec>(actual.values.data(), static_cast<Eigen::Index>(actual.values.size()));
  r.delta = r.x_prime - x;
  r.linf = linf_of(r.delta);
  r.l1 = r.delta.cwiseAbs().sum();
  r.success = cnn.predict(r.x_prime).label == config.target;
  out.result = r;
  return out;
}

std::vector<TransferRow> transfer_eval(const std::vector<const Model*>& victims, const std::vector<std::string>& names,
                                       const Mat& original, const Mat& perturbed, const std::vector<int>& y) {
  if (victims.size() != names.size()) throw Error(ErrorCode::ShapeMismatch, "one name per victim");
  if (original.rows() != perturbed.rows() || original.cols() != perturbed.cols() ||
      static_cast<std::size_t>(original.rows()) != y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "original and perturbed sets differ in shape");
  }
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<TransferRow> rows;
  for (std::size_t i = 0; i < victims.size(); ++i) {
    if (victims[i]->input_dim() != static_cast<std::size_t>(original.cols())) {
      throw Error(ErrorCode::ShapeMismatch, "victim " + names[i] + " expects a different width");
    }
    rows.push_back({names[i], evaluate(*victims[i], original, y, all).accuracy,
                    evaluate(*victims[i], perturbed, y, all).accuracy});
  }
  return rows;
}

std::string attack_record_json(const std::string& digest, RepresentationKind kind, Constraint constraint,
                               const AdversarialResult& r, const std::vector<TransferRow>& victims) {
  nlohmann::json j;
  j["digest"] = digest;
  j["kind"] = std::string(to_string(kind));
  j["constraint"] = std::string(to_string(constraint));
  j["success"] = r.success;
  j["linf"] = r.linf;
  j["iters"] = r.iters_used;
  nlohmann::json v = nlohmann::json::object();
  for (const auto& row : victims) v[row.victim] = row.perturbed_accuracy;
  j["victim_accuracies"] = v;
  return j.dump();
}

}  // namespace brt
