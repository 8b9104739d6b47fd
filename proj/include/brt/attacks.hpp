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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "brt/features.hpp"
#include "brt/learners.hpp"

namespace brt {

enum class NoiseMode { Gaussian, UniformShift };

std::string_view to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view text);

/// x'_i = x_i + max_i * delta * g with g ~ N(0,1) (Gaussian) or g = 1
/// (UniformShift, the formula read literally). delta = 0 returns x.
Mat gaussian_perturb(const Mat& x, const std::vector<double>& scaler_max, double delta, std::uint64_t seed,
                     NoiseMode mode = NoiseMode::Gaussian);

struct NoiseSweep {
  std::vector<double> deltas;
  std::vector<double> accuracy;  // parallel to deltas
  double baseline = 0.0;
  std::uint64_t seed = 0;
};

/// One noise draw per seed, scaled by each delta in turn, evaluated on the
/// test split. The scaler max comes from the model (train split).
NoiseSweep noise_sweep(const Model& model, const Dataset& data, const std::vector<double>& deltas, std::uint64_t seed,
                       NoiseMode mode = NoiseMode::Gaussian);

/// deltas 0.01, 0.02, ..., 1.00.
std::vector<double> default_deltas();

enum class Constraint { None, AddOnly, LowerHalf, AdditiveOnly };

std::string_view to_string(Constraint c);
Constraint parse_constraint(std::string_view text);

struct AttackConfig {
  std::size_t max_iters = 1000;    // total gradient steps across all rounds
  std::size_t inner_iters = 100;   // steps per (c, tau) solve
  double step = 0.01;              // Adam learning rate, in scaled units
  std::size_t c_search_steps = 9;
  double c_init = 1.0;
  double kappa = 0.0;
  double tau_init = 1.0;
  double tau_decay = 0.9;
  int target = 0;
  Constraint constraint = Constraint::None;
  std::optional<double> domain_lo;  // raw-unit box for x'
  std::optional<double> domain_hi;
  std::size_t rows = 0;             // image height, needed by LowerHalf
  std::size_t line_search_steps = 20;

  void validate() const;
};

struct AdversarialResult {
  Vec x_prime;
  Vec delta;
  Vec source;  // continuous point x_prime was discretized from
  bool success = false;
  double linf = 0.0;
  double l1 = 0.0;
  std::size_t iters_used = 0;
};

/// Maps a continuous candidate to the point that is actually submitted
/// (binarized matrix, rounded counts, re-rendered binary image). Success and
/// norms are measured on the returned point.
using Discretizer = std::function<Vec(const Vec& x0, const Vec& candidate)>;

/// Iterative C&W-Linf: Adam on c*max(Z_other - Z_t, -kappa) + sum relu(|d_i| - tau)
/// in the model's scaled coordinates. tau shrinks to min(tau, linf)*decay after
/// each successful round; c escalates (x10, then bisection) on failure, for
/// at most c_search_steps solves per tau level. Every iterate is projected
/// onto the constraint set and checked; successful iterates are shrunk by a
/// bisection line search on the perturbation scale before being compared.
AdversarialResult cw_linf(const Model& model, const Vec& x, const AttackConfig& config,
                          const Discretizer& discretize = {});

/// True when x' - x satisfies the constraint elementwise (and the domain box).
bool satisfies_constraint(const Vec& x, const Vec& x_prime, const AttackConfig& config, double tol = 0.0);

struct GraphAttackResult {
  AdversarialResult result;
  AdjacencyMatrix perturbed;
};

/// Edge-addition attack on a CfgAdjacency model: add_only C&W, then cells
/// that were 0 become 1 when they reach 0.5.
GraphAttackResult graph_attack(const Model& model, const AdjacencyMatrix& adj, AttackConfig config);

/// Additive bag-of-words attack: floor of the continuous counts, then ceil
/// greedily on the coordinates that help the target most until it flips.
AdversarialResult string_attack(const Model& model, const FeatureVector& bow, AttackConfig config);

struct PaddingAttackResult {
  RawBinary binary;
  AdversarialResult result;
};

/// Appends z_s crafted bytes so that to_image of the 2*z_s-byte output is
/// pushed toward config.target. Only the lower half of the image is attacked.
PaddingAttackResult padding_attack(const Model& cnn, const RawBinary& raw, const ImageSpec& spec, AttackConfig config);

/// Tail bytes whose rendering approximates `image` rows [h/2, h) once they
/// are appended to a file of `original_size` bytes.
Bytes image_to_tail(const std::vector<double>& image, const ImageSpec& spec, std::size_t original_size);

struct TransferRow {
  std::string victim;
  double original_accuracy = 0.0;
  double perturbed_accuracy = 0.0;
};

/// Accuracy of each victim on the original and perturbed rows.
std::vector<TransferRow> transfer_eval(const std::vector<const Model*>& victims, const std::vector<std::string>& names,
                                       const Mat& original, const Mat& perturbed, const std::vector<int>& y);

/// One JSONL record per attacked sample.
std::string attack_record_json(const std::string& digest, RepresentationKind kind, Constraint constraint,
                               const AdversarialResult& r, const std::vector<TransferRow>& victims = {});

}  // namespace brt
