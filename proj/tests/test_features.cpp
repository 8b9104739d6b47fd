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

#include <cmath>
#include <map>
#include <random>

#include "brt/features.hpp"
#include "brt/transform.hpp"
#include "fixtures.hpp"
#include "graph_oracle.hpp"

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

// Separable reference: resize rows first, then columns, with the
// half-pixel-centre convention written out independently.
std::vector<double> reference_resize(const Bytes& bytes, std::size_t dh, std::size_t dw) {
  std::size_t w = 1;
  while (w * w < bytes.size()) ++w;
  const std::size_t h = (bytes.size() + w - 1) / w;
  std::vector<std::vector<double>> grid(h, std::vector<double>(w, 0.0));
  for (std::size_t i = 0; i < bytes.size(); ++i) grid[i / w][i % w] = bytes[i];
  auto weights = [](std::size_t n_src, std::size_t n_dst) {
    std::vector<std::map<std::size_t, double>> out(n_dst);
    for (std::size_t i = 0; i < n_dst; ++i) {
      double c = (i + 0.5) * double(n_src) / double(n_dst) - 0.5;
      if (c < 0) c = 0;
      if (c > double(n_src - 1)) c = double(n_src - 1);
      const auto lo = std::size_t(c);
      const double t = c - double(lo);
      out[i][lo] += 1 - t;
      out[i][std::min(lo + 1, n_src - 1)] += t;
    }
    return out;
  };
  auto wy = weights(h, dh);
  auto wx = weights(w, dw);
  std::vector<std::vector<double>> horiz(h, std::vector<double>(dw, 0.0));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t x = 0; x < dw; ++x) {
      for (auto [c, wt] : wx[x]) horiz[r][x] += wt * grid[r][c];
    }
  }
  std::vector<double> out(dh * dw, 0.0);
  for (std::size_t y = 0; y < dh; ++y) {
    for (std::size_t x = 0; x < dw; ++x) {
      for (auto [r, wt] : wy[y]) out[y * dw + x] += wt * horiz[r][x];
      out[y * dw + x] /= 255.0;
    }
  }
  return out;
}

TEST(ToImage, TwoByTwoIdentity) {
  auto f = to_image(RawBinary(Bytes{0, 255, 0, 255}), {2, 2});
  EXPECT_EQ(f.values, (std::vector<double>{0, 1, 0, 1}));
  EXPECT_EQ(f.shape, (std::vector<std::size_t>{2, 2}));
}

TEST(ToImage, ConstantFileGivesConstantImage) {
  // Sizes that fill the layout exactly; otherwise the zero tail shows.
  for (std::size_t n : {1u, 6u, 100u, 4970u}) {
    ASSERT_EQ(n % image_layout_width(n), 0u);
    auto f = to_image(RawBinary(Bytes(n, 0xAB)), {64, 64});
    for (double v : f.values) EXPECT_NEAR(v, 0xAB / 255.0, 1e-12);
  }
}

TEST(ToImage, MatchesSeparableReference) {
  std::mt19937 rng(1);
  for (std::size_t n : {10240u, 999u, 70000u}) {
    Bytes bytes(n);
    for (auto& b : bytes) b = std::uint8_t(rng());
    auto f = to_image(RawBinary(bytes), {64, 64});
    auto ref = reference_resize(bytes, 64, 64);
    double worst = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - f.values[i]));
    EXPECT_LE(worst, 1e-6) << n;
  }
}

TEST(ToImage, Errors) {
  EXPECT_EQ(code_of([] { to_image(RawBinary(Bytes{}), {64, 64}); }), ErrorCode::EmptyFile);
  EXPECT_EQ(code_of([] { to_image(RawBinary(Bytes{1, 2}), {63, 64}); }), ErrorCode::OddImageHeight);
}

TEST(Vocabulary, SpecExamples) {
  EXPECT_EQ(build_vocabulary({{"a", "b"}, {"b"}}, 1).words(), std::vector<std::string>{"b"});
  EXPECT_EQ(build_vocabulary({{"c", "a", "b"}, {"b"}, {"c"}}, 10).words(), (std::vector<std::string>{"b", "c", "a"}));
  EXPECT_EQ(code_of([] { build_vocabulary({}, 5); }), ErrorCode::EmptyCorpus);
}

TEST(Vocabulary, MatchesBruteForceDocumentFrequency) {
  std::mt19937 rng(9);
  std::vector<std::vector<std::string>> corpus(100);
  for (auto& doc : corpus) {
    const int n = rng() % 30;
    for (int i = 0; i < n; ++i) doc.push_back("w" + std::to_string(rng() % 60));
  }
  auto vocab = build_vocabulary(corpus, 25);
  // Oracle: count per word by scanning every doc, then selection by repeated max.
  std::vector<std::string> all;
  for (int i = 0; i < 60; ++i) all.push_back("w" + std::to_string(i));
  std::map<std::string, int> df;
  for (const auto& w : all) {
    for (const auto& doc : corpus) df[w] += std::find(doc.begin(), doc.end(), w) != doc.end();
  }
  std::vector<std::string> want;
  while (want.size() < 25) {
    std::string best;
    int best_df = -1;
    for (const auto& [w, c] : df) {
      if (c > 0 && std::find(want.begin(), want.end(), w) == want.end() && c > best_df) {
        best = w;
        best_df = c;
      }
    }
    want.push_back(best);
  }
  EXPECT_EQ(vocab.words(), want);
  EXPECT_EQ(Vocabulary::from_text(vocab.to_text()).words(), vocab.words());
}

TEST(StringsBow, Counts) {
  Vocabulary v({"a", "b"});
  EXPECT_EQ(strings_bow({}, v).values, (std::vector<double>{0, 0}));
  EXPECT_EQ(strings_bow({"b", "b", "a", "zz"}, v).values, (std::vector<double>{1, 2}));
}

ElfImage three_func_image() {
  ElfBuilder b(64, true, 62);
  const auto t = b.add_section({.name = ".text", .flags = elf::SHF_ALLOC | elf::SHF_EXECINSTR, .addr = 0x1000,
                                .content = Bytes(1024, 0x90)});
  b.add_symbol_table({{"f", 0x1000, 1}, {"g", 0x1001, 1}, {"h", 0x1002, 1}}, false);
  b.add_segment({.flags = elf::PF_R | elf::PF_X, .first_section = t, .last_section = t, .vaddr = 0x1000});
  return parse_elf(b.build());
}

TEST(SymbolsVec, GlobalFunctions) {
  EXPECT_EQ(symbols_vec(three_func_image()).values, (std::vector<double>{3, 3, 0, 3, 0, 0, 0, 0, 0, 0}));
}

TEST(SectionsVec, ZeroEntropyTextAndCounts) {
  auto img = three_func_image();
  auto f = sections_vec(img);
  ASSERT_EQ(f.values.size(), 47u);
  EXPECT_EQ(f.values[0], 1.0);
  EXPECT_EQ(f.values[1], 1.0);  // 1024 bytes = 1 KiB
  EXPECT_EQ(f.values[2], 0.0);
  EXPECT_EQ(f.values[45], double(img.sections.size() - 1));
  EXPECT_EQ(f.values[46], 1.0);
}

TEST(SectionsVec, NoSectionTable) {
  ElfBuilder b(64, true, 62);
  b.section_headers(false).prologue(Bytes(32, 1)).add_segment({.flags = elf::PF_R});
  auto f = sections_vec(parse_elf(b.build()));
  for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(HexdumpVec, BasisVectorAndAbsent) {
  auto f = hexdump_vec(three_func_image());
  for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(f.values[i], i == 0x90 ? 1.0 : 0.0);
  ElfImage empty;
  for (double v : hexdump_vec(empty).values) EXPECT_EQ(v, 0.0);
}

TEST(SegmentsVec, Empty) {
  ElfImage empty;
  EXPECT_EQ(segments_vec(empty).values, std::vector<double>(8, 0.0));
}

TEST(CombinedVec, LayoutAndErrors) {
  Vocabulary v({"x", "y", "z"});
  auto img = three_func_image();
  std::vector<FeatureVector> parts{strings_bow({"y"}, v), symbols_vec(img), sections_vec(img), segments_vec(img),
                                   hexdump_vec(img)};
  auto c = combined_vec(parts, 3);
  ASSERT_EQ(c.values.size(), 3u + 10 + 47 + 8 + 256);
  std::size_t off = 0;
  for (const auto& p : parts) {
    EXPECT_TRUE(std::equal(p.values.begin(), p.values.end(), c.values.begin() + off));
    off += p.values.size();
  }
  parts[1].values.pop_back();
  EXPECT_EQ(code_of([&] { combined_vec(parts, 3); }), ErrorCode::DimensionMismatch);
}

class HostFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = testing::compile_c("feat_hello", testing::kHelloSource, "-O1 -g");
    if (path_.empty()) GTEST_SKIP() << "no C compiler";
    raw_ = RawBinary(read_file(path_.string()), Label::Benign);
    elf_ = parse_elf(raw_);
  }
  std::filesystem::path path_;
  RawBinary raw_;
  ElfImage elf_;
};

TEST_F(HostFixture, EntropySlotsMatchHistogramOracle) {
  auto f = sections_vec(elf_);
  for (std::size_t c = 0; c < kCanonicalSections.size(); ++c) {
    const Section* s = elf_.find_section(kCanonicalSections[c]);
    if (!s || s->content.empty()) continue;
    auto hist = byte_histogram(s->content);
    double h = 0;
    for (auto n : hist) {
      if (n) {
        const double p = double(n) / double(s->content.size());
        h += -p * std::log(p) / std::log(2.0);
      }
    }
    EXPECT_NEAR(f.values[3 * c + 2], h, 1e-9) << kCanonicalSections[c];
  }
}

TEST_F(HostFixture, HexdumpIsNormalizedTextHistogram) {
  auto f = hexdump_vec(elf_);
  auto hist = byte_histogram(elf_.find_section(".text")->content);
  const double n = double(elf_.find_section(".text")->content.size());
  double sum = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_NEAR(f.values[i] * n, double(hist[i]), 1e-9);
    sum += f.values[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST_F(HostFixture, DynamicFixtureHasDynamicSegment) {
  auto f = segments_vec(elf_);
  EXPECT_EQ(f.values[2], 1.0);
  EXPECT_EQ(f.values[3], 1.0);
  EXPECT_GE(f.values[7], f.values[6]);
}

TEST(SegmentsVecStatic, StaticFixtureHasNoDynamic) {
  auto path = testing::compile_c("feat_static", testing::kHelloSource, "-O1 -static");
  if (path.empty()) GTEST_SKIP() << "static linking unavailable";
  auto f = segments_vec(parse_elf(read_file(path.string())));
  EXPECT_EQ(f.values[2], 0.0);
  EXPECT_EQ(f.values[3], 0.0);
}

TEST_F(HostFixture, AllNineKindsHaveDocumentedShapes) {
  std::vector<std::vector<std::string>> docs{extract_strings(raw_)};
  Vocabulary vocab = build_vocabulary(docs, 50);
  auto cfg = testing::make_graph(3, {{0, 1}, {1, 2}});
  FeatureContext ctx{{64, 64}, &vocab, 16};
  for (auto kind : kAllKinds) {
    auto f = extract(kind, raw_, &elf_, &cfg, ctx);
    EXPECT_EQ(f.values.size(), feature_dim(kind, ctx)) << to_string(kind);
    EXPECT_EQ(f.shape, feature_shape(kind, ctx)) << to_string(kind);
    EXPECT_EQ(f.digest, raw_.sha256());
    for (double v : f.values) EXPECT_GE(v, 0.0);
  }
  EXPECT_EQ(extract(RepresentationKind::Hexdump, raw_, &elf_, nullptr, ctx).values, hexdump_vec(elf_).values);
  EXPECT_EQ(code_of([&] { extract(RepresentationKind::CfgAdjacency, raw_, &elf_, nullptr, ctx); }),
            ErrorCode::MissingContext);
  EXPECT_EQ(code_of([&] { extract(RepresentationKind::Strings, raw_, &elf_, nullptr, FeatureContext{}); }),
            ErrorCode::MissingContext);
}

TEST_F(HostFixture, PaddingLeavesReverseEngineeredKindsUnchanged) {
  std::vector<std::vector<std::string>> docs{extract_strings(raw_)};
  Vocabulary vocab = build_vocabulary(docs, 50);
  auto cfg = testing::make_graph(3, {{0, 1}, {1, 2}});
  FeatureContext ctx{{64, 64}, &vocab, 16};
  std::mt19937 rng(4);
  Bytes tail(3000);
  for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = i % 3 == 2 ? 0 : std::uint8_t(rng());  // no long runs
  RawBinary padded = pad_binary(raw_, tail);
  ElfImage padded_elf = parse_elf(padded);
  for (auto kind : kAllKinds) {
    auto a = extract(kind, raw_, &elf_, &cfg, ctx);
    auto b = extract(kind, padded, &padded_elf, &cfg, ctx);
    if (kind == RepresentationKind::Image) {
      EXPECT_NE(a.values, b.values);
    } else {
      EXPECT_EQ(a.values, b.values) << to_string(kind);
    }
  }
}

TEST_F(HostFixture, StripClearsStaticSymbolsKeepsHexdump) {
  RawBinary stripped = strip_binary(raw_);
  ElfImage s = parse_elf(stripped);
  auto sym = symbols_vec(s);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(sym.values[i], 0.0);
  EXPECT_EQ(sym.values[5], symbols_vec(elf_).values[5]);
  EXPECT_EQ(hexdump_vec(s).values, hexdump_vec(elf_).values);
}

TEST(Serialization, FvxRoundTripAndCsvHeader) {
  std::vector<std::vector<double>> rows{{1.5, -2.0, 1e-300}, {0, 3, 4}};
  EXPECT_EQ(from_fvx(to_fvx(rows, 3)), rows);
  Bytes bad{'F', 'V', 'X', '2', 0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { from_fvx(bad); }), ErrorCode::ParseError);
  FeatureVector f{RepresentationKind::Hexdump, {0.25, 0.75}, {2}, "abc"};
  EXPECT_EQ(to_csv({f}, {Label::Malicious}), "digest,label,hexdump:0,hexdump:1\nabc,malicious,0.25,0.75\n");
}

}  // namespace
}  // namespace brt
