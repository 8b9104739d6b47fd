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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brt/attacks.hpp"
#include "brt/config.hpp"
#include "brt/corpus.hpp"

namespace brt {

/// A rendered result grid. Cells are preformatted strings so that every
/// rendering of the same table is byte-identical.
struct ReportTable {
  std::string kind;  // baseline | whitebox | manipulation | noise_curves | engine_table | distributions
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  std::string to_csv() const;
  std::string to_markdown() const;
  nlohmann::json to_json() const;
  static ReportTable from_json(const nlohmann::json& j);

  /// Writes <dir>/<kind>.{csv,md,json}.
  void write(const std::filesystem::path& dir) const;
};

std::string format_accuracy(double v);

/// Everything a run shares: the corpus, the split over originals (which
/// manipulated samples inherit), the train-only vocabulary and scalers, and
/// lazily trained models.
class Study {
 public:
  Study(ExperimentConfig config, Corpus corpus);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Corpus& corpus() const noexcept { return corpus_; }
  const std::vector<CorpusEntry>& originals() const noexcept { return originals_; }
  const Split& split() const noexcept { return split_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  FeatureContext context() const;
  bool is_test(const std::string& original_digest) const;

  /// Feature vector of any corpus entry.
  FeatureVector features(RepresentationKind kind, const CorpusEntry& e) const;
  FeatureVector features(RepresentationKind kind, const RawBinary& raw, const ControlFlowGraph* cfg) const;
  /// Originals as a dataset with the study split (cached).
  const Dataset& dataset(RepresentationKind kind);
  /// Trains on first use; `models_dir`, when set, is used to load and save.
  const Model& model(RepresentationKind kind, ModelSlot slot);
  void set_models_dir(std::filesystem::path dir) { models_dir_ = std::move(dir); }

  /// Rows (in originals() order) of the malicious test samples to attack.
  std::vector<std::size_t> attack_rows();

 private:
  ExperimentConfig config_;
  Corpus corpus_;
  std::vector<CorpusEntry> originals_;
  Split split_;
  std::map<std::string, bool> test_;  // original digest -> in test split
  Vocabulary vocab_;
  std::map<RepresentationKind, Dataset> datasets_;
  std::map<std::pair<RepresentationKind, ModelSlot>, std::unique_ptr<Model>> models_;
  std::optional<std::filesystem::path> models_dir_;
};

ReportTable run_baseline(Study& study);
ReportTable run_noise(Study& study);

struct WhiteboxOutput {
  ReportTable table;
  std::vector<std::string> records;  // JSONL lines
};
WhiteboxOutput run_whitebox(Study& study);

/// Accuracy per representation, model and class on the test-split members
/// of each lineage.
ReportTable run_manipulation(Study& study);

struct EngineOutput {
  ReportTable engines;
  ReportTable distributions;
};
/// Submits every sample of every lineage. Throws ConfigError when neither an
/// endpoint nor a mock script is configured.
EngineOutput run_engines(Study& study);

/// Generates (or loads) the corpus, applies the configured manipulations,
/// runs every stage and writes all reports under config.output. The engine
/// stage runs only when a scan endpoint or mock script is configured.
void run_all(const ExperimentConfig& config);

}  // namespace brt
