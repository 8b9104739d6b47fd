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

#include "brt/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <unordered_map>

namespace brt {

std::string_view to_string(RepresentationKind kind) {
  switch (kind) {
    case RepresentationKind::Image: return "image";
    case RepresentationKind::CfgAdjacency: return "cfg_adjacency";
    case RepresentationKind::CfgAlgorithmic: return "cfg_algorithmic";
    case RepresentationKind::Strings: return "strings";
    case RepresentationKind::Symbols: return "symbols";
    case RepresentationKind::Sections: return "sections";
    case RepresentationKind::Segments: return "segments";
    case RepresentationKind::Hexdump: return "hexdump";
    case RepresentationKind::Combined: return "combined";
  }
  return "image";
}

RepresentationKind parse_kind(std::string_view text) {
  for (auto k : kAllKinds) {
    if (to_string(k) == text) return k;
  }
  if (text == "adjacency" || text == "cfg-adjacency") return RepresentationKind::CfgAdjacency;
  if (text == "algorithmic" || text == "cfg-algorithmic") return RepresentationKind::CfgAlgorithmic;
  throw Error(ErrorCode::InvalidArgument, "unknown representation '" + std::string(text) + "'");
}

bool is_spatial(RepresentationKind kind) {
  return kind == RepresentationKind::Image || kind == RepresentationKind::CfgAdjacency ||
         kind == RepresentationKind::CfgAlgorithmic;
}

void ImageSpec::validate() const {
  if (h < 2 || w < 2) throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 2");
  if (h % 2 != 0) throw Error(ErrorCode::OddImageHeight, "image height must be even, got " + std::to_string(h));
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

std::optional<std::size_t> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& w : words_) {
    out += w;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) words.push_back(line);
  return Vocabulary(std::move(words));
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "vocabulary size must be >= 1");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    std::set<std::string> unique(doc.begin(), doc.end());
    for (const auto& w : unique) ++df[w];
  }
  if (df.empty()) throw Error(ErrorCode::EmptyCorpus, "no strings to build a vocabulary from");
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, _] : ranked) words.push_back(std::move(w));
  return Vocabulary(std::move(words));
}

std::size_t image_layout_width(std::size_t size) {
  auto w = static_cast<std::size_t>(std::sqrt(static_cast<double>(size)));
  while (w * w < size) ++w;
  while (w > 1 && (w - 1) * (w - 1) >= size) --w;
  return std::max<std::size_t>(w, 1);
}

std::vector<double> bilinear_resize(const std::vector<double>& src, std::size_t src_h, std::size_t src_w,
                                    std::size_t dst_h, std::size_t dst_w) {
  std::vector<double> out(dst_h * dst_w);
  auto coord = [](std::size_t i, std::size_t src, std::size_t dst, std::size_t& lo, std::size_t& hi, double& frac) {
    double c = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
    c = std::clamp(c, 0.0, static_cast<double>(src - 1));
    lo = static_cast<std::size_t>(std::floor(c));
    hi = std::min(lo + 1, src - 1);
    frac = c - static_cast<double>(lo);
  };
  for (std::size_t y = 0; y < dst_h; ++y) {
    std::size_t y0, y1;
    double fy;
    coord(y, src_h, dst_h, y0, y1, fy);
    for (std::size_t x = 0; x < dst_w; ++x) {
      std::size_t x0, x1;
      double fx;
      coord(x, src_w, dst_w, x0, x1, fx);
      const double top = src[y0 * src_w + x0] * (1 - fx) + src[y0 * src_w + x1] * fx;
      const double bottom = src[y1 * src_w + x0] * (1 - fx) + src[y1 * src_w + x1] * fx;
      out[y * dst_w + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

FeatureVector to_image(const RawBinary& raw, const ImageSpec& spec) {
  spec.validate();
  if (raw.size() == 0) throw Error(ErrorCode::EmptyFile, "cannot render an empty file");
  const std::size_t w = image_layout_width(raw.size());
  const std::size_t h = (raw.size() + w - 1) / w;
  std::vector<double> grid(h * w, 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) grid[i] = raw.bytes()[i] / 255.0;
  return {RepresentationKind::Image, bilinear_resize(grid, h, w, spec.h, spec.w), {spec.h, spec.w}, raw.sha256()};
}

FeatureVector strings_bow(const std::vector<std::string>& strings, const Vocabulary& vocab) {
  FeatureVector f{RepresentationKind::Strings, std::vector<double>(vocab.size(), 0.0), {vocab.size()}, {}};
  for (const auto& s : strings) {
    if (auto i = vocab.find(s)) f.values[*i] += 1.0;
  }
  return f;
}

FeatureVector symbols_vec(const ElfImage& elf) {
  FeatureVector f{RepresentationKind::Symbols, std::vector<double>(kSymbolsDim, 0.0), {kSymbolsDim}, {}};
  auto fill = [&](const std::vector<SymbolEntry>& table, std::size_t base) {
    for (const auto& s : table) {
      f.values[base] += 1;
      if (s.sym_type == SymbolType::Func) f.values[base + 1] += 1;
      if (s.sym_type == SymbolType::Object) f.values[base + 2] += 1;
      if (s.bind == SymbolBind::Global) f.values[base + 3] += 1;
      if (s.bind == SymbolBind::Weak) f.values[base + 4] += 1;
    }
  };
  fill(elf.symbols, 0);
  fill(elf.dyn_symbols, 5);
  return f;
}

FeatureVector sections_vec(const ElfImage& elf) {
  FeatureVector f{RepresentationKind::Sections, std::vector<double>(kSectionsDim, 0.0), {kSectionsDim}, {}};
  for (std::size_t c = 0; c < kCanonicalSections.size(); ++c) {
    const Section* s = elf.find_section(kCanonicalSections[c]);
    if (!s) continue;
    f.values[3 * c] = 1.0;
    f.values[3 * c + 1] = static_cast<double>(s->size) / 1024.0;
    f.values[3 * c + 2] = shannon_entropy(s->content);
  }
  double total = 0;
  double exec = 0;
  for (std::size_t i = 0; i < elf.sections.size(); ++i) {
    if (elf.sections[i].sh_type == elf::SHT_NULL && i == 0) continue;
    total += 1;
    exec += elf.sections[i].exec() ? 1 : 0;
  }
  f.values[kSectionsDim - 2] = total;
  f.values[kSectionsDim - 1] = exec;
  return f;
}

FeatureVector segments_vec(const ElfImage& elf) {
  FeatureVector f{RepresentationKind::Segments, std::vector<double>(kSegmentsDim, 0.0), {kSegmentsDim}, {}};
  auto& v = f.values;
  for (const auto& seg : elf.segments) {
    v[0] += 1;
    if (seg.p_type == elf::PT_LOAD) {
      v[1] += 1;
      if (seg.flags & elf::PF_X) v[4] += 1;
      if (seg.flags & elf::PF_W) v[5] += 1;
    }
    if (seg.p_type == elf::PT_DYNAMIC) v[2] = 1;
    if (seg.p_type == elf::PT_INTERP) v[3] = 1;
    v[6] += static_cast<double>(seg.filesz) / 1024.0;
    v[7] += static_cast<double>(seg.memsz) / 1024.0;
  }
  return f;
}

FeatureVector hexdump_vec(const ElfImage& elf) {
  FeatureVector f{RepresentationKind::Hexdump, std::vector<double>(kHexdumpDim, 0.0), {kHexdumpDim}, {}};
  const Section* text = elf.find_section(".text");
  if (!text || text->content.empty()) return f;
  const auto hist = byte_histogram(text->content);
  const double n = static_cast<double>(text->content.size());
  for (std::size_t i = 0; i < kHexdumpDim; ++i) f.values[i] = static_cast<double>(hist[i]) / n;
  return f;
}

FeatureVector combined_vec(const std::vector<FeatureVector>& parts, std::size_t vocab_size) {
  const std::array<std::pair<RepresentationKind, std::size_t>, 5> layout = {{
      {RepresentationKind::Strings, vocab_size},
      {RepresentationKind::Symbols, kSymbolsDim},
      {RepresentationKind::Sections, kSectionsDim},
      {RepresentationKind::Segments, kSegmentsDim},
      {RepresentationKind::Hexdump, kHexdumpDim},
  }};
  if (parts.size() != layout.size()) {
    throw Error(ErrorCode::DimensionMismatch, "combined needs exactly five parts, got " + std::to_string(parts.size()));
  }
  FeatureVector f{RepresentationKind::Combined, {}, {}, parts.front().digest};
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (parts[i].kind != layout[i].first || parts[i].values.size() != layout[i].second) {
      throw Error(ErrorCode::DimensionMismatch, "combined part " + std::to_string(i) + " (" +
                                                    std::string(to_string(parts[i].kind)) + ") has unexpected shape");
    }
    f.values.insert(f.values.end(), parts[i].values.begin(), parts[i].values.end());
  }
  f.shape = {f.values.size()};
  return f;
}

FeatureVector cfg_adjacency_vec(const ControlFlowGraph& g, std::size_t d) {
  const auto m = adjacency_matrix(g, d);
  return {RepresentationKind::CfgAdjacency, std::vector<double>(m.cells.begin(), m.cells.end()), {d, d}, {}};
}

FeatureVector cfg_algorithmic_vec(const ControlFlowGraph& g) {
  const auto gf = graph_features(g);
  return {RepresentationKind::CfgAlgorithmic, std::vector<double>(gf.begin(), gf.end()), {kGraphFeatureDim}, {}};
}

std::vector<std::size_t> feature_shape(RepresentationKind kind, const FeatureContext& ctx) {
  const std::size_t vocab = ctx.vocab ? ctx.vocab->size() : 0;
  switch (kind) {
    case RepresentationKind::Image: return {ctx.image.h, ctx.image.w};
    case RepresentationKind::CfgAdjacency: return {ctx.adjacency_dim, ctx.adjacency_dim};
    case RepresentationKind::CfgAlgorithmic: return {kGraphFeatureDim};
    case RepresentationKind::Strings: return {vocab};
    case RepresentationKind::Symbols: return {kSymbolsDim};
    case RepresentationKind::Sections: return {kSectionsDim};
    case RepresentationKind::Segments: return {kSegmentsDim};
    case RepresentationKind::Hexdump: return {kHexdumpDim};
    case RepresentationKind::Combined: return {vocab + kSymbolsDim + kSectionsDim + kSegmentsDim + kHexdumpDim};
  }
  return {};
}

std::size_t feature_dim(RepresentationKind kind, const FeatureContext& ctx) {
  std::size_t n = 1;
  for (auto s : feature_shape(kind, ctx)) n *= s;
  return n;
}

FeatureVector extract(RepresentationKind kind, const RawBinary& raw, const ElfImage* elf, const ControlFlowGraph* cfg,
                      const FeatureContext& ctx) {
  auto need_elf = [&] {
    if (!elf) throw Error(ErrorCode::MissingContext, std::string(to_string(kind)) + " needs a parsed ELF image");
  };
  auto need_cfg = [&] {
    if (!cfg) throw Error(ErrorCode::MissingContext, std::string(to_string(kind)) + " needs a control-flow graph");
  };
  auto need_vocab = [&] {
    if (!ctx.vocab) throw Error(ErrorCode::MissingContext, std::string(to_string(kind)) + " needs a vocabulary");
  };
  FeatureVector f;
  switch (kind) {
    case RepresentationKind::Image: f = to_image(raw, ctx.image); break;
    case RepresentationKind::CfgAdjacency: need_cfg(); f = cfg_adjacency_vec(*cfg, ctx.adjacency_dim); break;
    case RepresentationKind::CfgAlgorithmic: need_cfg(); f = cfg_algorithmic_vec(*cfg); break;
    case RepresentationKind::Strings: need_vocab(); f = strings_bow(extract_strings(raw), *ctx.vocab); break;
    case RepresentationKind::Symbols: need_elf(); f = symbols_vec(*elf); break;
    case RepresentationKind::Sections: need_elf(); f = sections_vec(*elf); break;
    case RepresentationKind::Segments: need_elf(); f = segments_vec(*elf); break;
    case RepresentationKind::Hexdump: need_elf(); f = hexdump_vec(*elf); break;
    case RepresentationKind::Combined: {
      need_elf();
      need_vocab();
      f = combined_vec({strings_bow(extract_strings(raw), *ctx.vocab), symbols_vec(*elf), sections_vec(*elf),
                        segments_vec(*elf), hexdump_vec(*elf)},
                       ctx.vocab->size());
      break;
    }
  }
  f.digest = raw.sha256();
  return f;
}

std::string to_csv(const std::vector<FeatureVector>& rows, const std::vector<Label>& labels) {
  std::ostringstream out;
  out.precision(17);
  if (rows.empty()) return "digest,label\n";
  out << "digest,label";
  for (std::size_t i = 0; i < rows.front().values.size(); ++i) out << ',' << to_string(rows.front().kind) << ':' << i;
  out << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << rows[r].digest << ',' << (r < labels.size() ? to_string(labels[r]) : "unknown");
    for (double v : rows[r].values) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

Bytes to_fvx(const std::vector<std::vector<double>>& rows, std::size_t dims) {
  Bytes out{'F', 'V', 'X', '1'};
  append_int<std::uint32_t>(out, static_cast<std::uint32_t>(dims), true);
  for (const auto& row : rows) {
    if (row.size() != dims) throw Error(ErrorCode::DimensionMismatch, "FVX row width differs from header");
    for (double v : row) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      append_int<std::uint64_t>(out, bits, true);
    }
  }
  return out;
}

std::vector<std::vector<double>> from_fvx(ByteView bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "FVX1", 4) != 0) {
    throw Error(ErrorCode::ParseError, "missing FVX1 magic");
  }
  const auto dims = load_int<std::uint32_t>(bytes, 4, true);
  const std::size_t body = bytes.size() - 8;
  if (dims == 0 ? body != 0 : body % (8ull * dims) != 0) throw Error(ErrorCode::ParseError, "FVX1 body is not a whole number of rows");
  std::vector<std::vector<double>> rows(dims == 0 ? 0 : body / (8ull * dims), std::vector<double>(dims));
  std::size_t off = 8;
  for (auto& row : rows) {
    for (auto& v : row) {
      const auto bits = load_int<std::uint64_t>(bytes, off, true);
      std::memcpy(&v, &bits, sizeof v);
      off += 8;
    }
  }
  return rows;
}

}  // namespace brt
