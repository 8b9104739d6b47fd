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

#include <string>
#include <vector>

#include <json.hpp>

#include "brt/attacks.hpp"
#include "brt/corpus.hpp"
#include "brt/features.hpp"
#include "brt/learners.hpp"
#include "brt/scan.hpp"

namespace brt {

/// Parses the TOML subset used by experiment files: tables, dotted keys,
/// strings, integers, floats, booleans, arrays and inline tables. Arrays of
/// tables and dates are not supported. Throws ConfigError with a line number.
nlohmann::json parse_toml(const std::string& text);

/// A model column of the study. Nn resolves to the CNN for spatial kinds and
/// to the MLP otherwise.
enum class ModelSlot { Lr, Rf, Nn };

std::string_view to_string(ModelSlot slot);
ModelKind resolve(ModelSlot slot, RepresentationKind kind);

/// LR slot defaults (full-batch descent).
inline Hyperparams logistic_defaults() {
  Hyperparams hp;
  hp.epochs = 2000;
  hp.learning_rate = 1.0;
  return hp;
}

/// Graph attack defaults; kappa 20.
inline AttackConfig graph_attack_defaults() {
  AttackConfig a;
  a.kappa = 20.0;
  return a;
}

struct ExperimentConfig {
  std::vector<RepresentationKind> representations{kAllKinds.begin(), kAllKinds.end()};
  std::vector<ModelSlot> models{ModelSlot::Lr, ModelSlot::Rf, ModelSlot::Nn};
  double split = 0.8;  // train fraction
  std::uint64_t seed = 0;
  ImageSpec image;
  std::size_t adjacency_dim = 150;
  std::size_t vocab_k = 200;
  std::string output = "runs/default";

  std::string corpus_dir;  // empty: <output>/corpus
  std::size_t n_benign = 100;
  std::size_t n_malicious = 100;
  std::string compiler = "cc";
  std::vector<ManipulationOp> ops{ManipulationOp::Pack, ManipulationOp::PackBest, ManipulationOp::Strip,
                                  ManipulationOp::Pad};

  Hyperparams lr = logistic_defaults();
  Hyperparams rf;
  Hyperparams mlp;
  Hyperparams cnn;

  std::vector<double> deltas = default_deltas();
  NoiseMode noise_mode = NoiseMode::Gaussian;

  AttackConfig graph_attack = graph_attack_defaults();
  AttackConfig string_attack;
  AttackConfig padding_attack;
  std::size_t attack_samples = 0;  // malicious test samples per attack, 0 = all

  ScanClientConfig scan;
  std::string mock_script;  // path; when set the run starts the bundled mock
  std::size_t min_samples = kDefaultMinSamples;

  /// Throws ConfigError.
  void validate() const;
  const Hyperparams& hyperparams(ModelKind kind) const;
  std::string corpus_path() const { return corpus_dir.empty() ? output + "/corpus" : corpus_dir; }
  /// Canonical JSON of every field; its SHA-256 is the config digest.
  nlohmann::json to_json() const;
  std::string digest() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& toml_text);

}  // namespace brt
