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
#include <optional>
#include <string>
#include <vector>

#include "brt/cfg.hpp"
#include "brt/elf.hpp"

namespace brt {

struct CorpusEntry {
  std::string digest;
  std::string path;  // relative to the manifest directory
  Label label = Label::Unknown;
  Lineage lineage = Lineage::Original;
  std::optional<std::string> family;
  std::string opt_level;  // none | standard | aggressive, empty when unknown
  std::string cfg_path;   // relative; empty when no CFG is available
  std::string parent;     // original digest for manipulated samples
};

/// Samples plus the JSONL manifest that lists them.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::filesystem::path root) : root_(std::move(root)) {}

  /// Reads root/manifest.jsonl. Throws IoError when a listed path is
  /// missing and SchemaError on duplicate (digest, lineage) pairs or labels
  /// other than benign/malicious.
  static Corpus load(const std::filesystem::path& root);
  void save() const;

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path manifest_path() const { return root_ / "manifest.jsonl"; }
  const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }

  void add(CorpusEntry entry);
  std::vector<CorpusEntry> with_lineage(Lineage lineage) const;
  const CorpusEntry* find(const std::string& digest, Lineage lineage) const;

  RawBinary read(const CorpusEntry& e) const;
  std::optional<ControlFlowGraph> cfg(const CorpusEntry& e) const;

 private:
  std::filesystem::path root_;
  std::vector<CorpusEntry> entries_;
};

std::string manifest_line(const CorpusEntry& e);
CorpusEntry parse_manifest_line(const std::string& line);

struct GeneratorOptions {
  std::string compiler = "cc";
  bool allow_fallback = true;  // use the builder pool when no compiler works
  bool self_check = true;      // parse and execute every generated binary
};

/// Writes n_benign + n_malicious programs (binary, C source, CFG JSON) and a
/// manifest under `outdir`. Output is a pure function of the counts and seed.
/// Throws InvalidArgument for counts below 10 and ToolchainMissing when no
/// compiler works and the fallback is disabled.
Corpus generate_synthetic_corpus(std::size_t n_benign, std::size_t n_malicious, std::uint64_t seed,
                                 const std::filesystem::path& outdir, const GeneratorOptions& options = {});

/// Registers every ELF file under `dir` with the given label. A sibling
/// "<name>.cfg.json" is picked up as the sample's CFG.
Corpus ingest_directory(const std::filesystem::path& dir, Label label, const std::filesystem::path& outdir);

enum class ManipulationOp { Pack, PackBest, Strip, Pad };

ManipulationOp parse_manipulation(std::string_view text);
std::string_view to_string(ManipulationOp op);

/// Applies each op to every original in the corpus and records the results
/// next to them. Packed samples get the CFG of their container (a single
/// entry block); stripped and padded samples share the original's CFG.
/// Pad appends size-of-original seeded random bytes.
void manipulate_corpus(Corpus& corpus, const std::vector<ManipulationOp>& ops, std::uint64_t seed);

/// CFG of a surrogate-packed file: one block at the container entry.
ControlFlowGraph packed_container_cfg(const RawBinary& packed);

/// String literals the generator plants only in malicious programs.
const std::vector<std::string>& malicious_marker_strings();

/// True when `compiler` can build and run a trivial program.
bool toolchain_available(const std::string& compiler);

}  // namespace brt
