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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "brt/cfg.hpp"
#include "brt/elf.hpp"

namespace brt {

enum class RepresentationKind { Image, CfgAdjacency, CfgAlgorithmic, Strings, Symbols, Sections, Segments, Hexdump, Combined };

inline constexpr std::array<RepresentationKind, 9> kAllKinds = {
    RepresentationKind::Image,    RepresentationKind::CfgAdjacency, RepresentationKind::CfgAlgorithmic,
    RepresentationKind::Strings,  RepresentationKind::Symbols,      RepresentationKind::Sections,
    RepresentationKind::Segments, RepresentationKind::Hexdump,      RepresentationKind::Combined};

std::string_view to_string(RepresentationKind kind);
RepresentationKind parse_kind(std::string_view text);
/// Image and CFG kinds go to the CNN, the rest to the MLP.
bool is_spatial(RepresentationKind kind);

struct ImageSpec {
  std::size_t h = 64;
  std::size_t w = 64;

  /// Throws InvalidArgument (h or w < 2) or OddImageHeight.
  void validate() const;
};

struct FeatureVector {
  RepresentationKind kind = RepresentationKind::Image;
  std::vector<double> values;
  std::vector<std::size_t> shape;
  std::string digest;
};

/// Frozen word list with O(log n) lookup.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  std::optional<std::size_t> find(const std::string& word) const;

  std::string to_text() const;  // one word per line
  static Vocabulary from_text(const std::string& text);

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t> index_;
};

/// Top-K strings by document frequency, ties broken lexicographically.
/// Throws EmptyCorpus when there is nothing to rank.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, std::size_t k);

/// Byte layout of width ceil(sqrt(z)), bilinearly resampled to h x w, /255.
FeatureVector to_image(const RawBinary& raw, const ImageSpec& spec);
/// The same resampler applied to an already laid-out grey matrix.
std::vector<double> bilinear_resize(const std::vector<double>& src, std::size_t src_h, std::size_t src_w,
                                    std::size_t dst_h, std::size_t dst_w);
/// Width of the byte layout used for a file of `size` bytes.
std::size_t image_layout_width(std::size_t size);

FeatureVector strings_bow(const std::vector<std::string>& strings, const Vocabulary& vocab);
FeatureVector symbols_vec(const ElfImage& elf);
FeatureVector sections_vec(const ElfImage& elf);
FeatureVector segments_vec(const ElfImage& elf);
FeatureVector hexdump_vec(const ElfImage& elf);
/// Concatenates [strings, symbols, sections, segments, hexdump].
FeatureVector combined_vec(const std::vector<FeatureVector>& parts, std::size_t vocab_size);
FeatureVector cfg_adjacency_vec(const ControlFlowGraph& g, std::size_t d);
FeatureVector cfg_algorithmic_vec(const ControlFlowGraph& g);

inline const std::array<std::string_view, 15> kCanonicalSections = {
    ".text", ".data", ".rodata", ".bss",    ".init",    ".fini",       ".plt",     ".got",
    ".symtab", ".strtab", ".dynsym", ".dynstr", ".comment", ".debug_info", ".shstrtab"};
inline constexpr std::size_t kSymbolsDim = 10;
inline constexpr std::size_t kSectionsDim = 3 * 15 + 2;
inline constexpr std::size_t kSegmentsDim = 8;
inline constexpr std::size_t kHexdumpDim = 256;

struct FeatureContext {
  ImageSpec image;
  const Vocabulary* vocab = nullptr;
  std::size_t adjacency_dim = 150;
};

/// Number of values extract() produces for `kind` under `ctx`.
std::size_t feature_dim(RepresentationKind kind, const FeatureContext& ctx);
std::vector<std::size_t> feature_shape(RepresentationKind kind, const FeatureContext& ctx);

/// Dispatches to the extractor for `kind`. `elf` and `cfg` may be null when
/// the kind does not need them; otherwise throws MissingContext.
FeatureVector extract(RepresentationKind kind, const RawBinary& raw, const ElfImage* elf, const ControlFlowGraph* cfg,
                      const FeatureContext& ctx);

/// Feature matrix serialization. CSV header: digest,label,<kind>:0,<kind>:1,...
std::string to_csv(const std::vector<FeatureVector>& rows, const std::vector<Label>& labels);
/// "FVX1", u32 dims, then rows*dims f64 little-endian values.
Bytes to_fvx(const std::vector<std::vector<double>>& rows, std::size_t dims);
std::vector<std::vector<double>> from_fvx(ByteView bytes);

}  // namespace brt
