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

#include <functional>
#include <set>

#include "brt/corpus.hpp"
#include "brt/features.hpp"
#include "brt/transform.hpp"
#include "fixtures.hpp"

namespace brt {
namespace {

namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

fs::path fresh(const std::string& name) {
  const auto dir = testing::scratch_dir() / name;
  fs::remove_all(dir);
  return dir;
}

// 10 + 10 programs, generated once per process.
const Corpus& small_corpus() {
  static const Corpus corpus = [] {
    if (!toolchain_available("cc")) return Corpus();
    return generate_synthetic_corpus(10, 10, 5, fresh("corpus-a"));
  }();
  return corpus;
}

#define REQUIRE_TOOLCHAIN() \
  if (small_corpus().entries().empty()) GTEST_SKIP() << "no C toolchain"

TEST(Generator, SameSeedSameManifest) {
  REQUIRE_TOOLCHAIN();
  const auto again = generate_synthetic_corpus(10, 10, 5, fresh("corpus-b"));
  EXPECT_EQ(read_text(small_corpus().manifest_path().string()), read_text(again.manifest_path().string()));
  const auto other = generate_synthetic_corpus(10, 10, 6, fresh("corpus-c"));
  EXPECT_NE(read_text(small_corpus().manifest_path().string()), read_text(other.manifest_path().string()));
}

TEST(Generator, EveryBinaryParsesAndRuns) {
  REQUIRE_TOOLCHAIN();
  const auto& c = small_corpus();
  ASSERT_EQ(c.entries().size(), 20u);
  std::size_t benign = 0;
  for (const auto& e : c.entries()) {
    EXPECT_EQ(e.lineage, Lineage::Original);
    benign += e.label == Label::Benign ? 1 : 0;
    const RawBinary raw = c.read(e);
    EXPECT_EQ(raw.sha256(), e.digest);
    EXPECT_NO_THROW(parse_elf(raw));
    EXPECT_EQ(testing::run_binary(raw, "gen_run").status, 0) << e.path;
    EXPECT_TRUE(e.opt_level == "none" || e.opt_level == "standard" || e.opt_level == "aggressive");
  }
  EXPECT_EQ(benign, 10u);
}

TEST(Generator, ClassTraitsArePresent) {
  REQUIRE_TOOLCHAIN();
  const auto& c = small_corpus();
  for (const auto& e : c.entries()) {
    const auto elf = parse_elf(c.read(e));
    const bool payload = elf.find_section(".payload") != nullptr;
    EXPECT_EQ(payload, e.label == Label::Malicious) << e.path;
    const auto* bss = elf.find_section(".bss");
    ASSERT_NE(bss, nullptr);
    if (e.label == Label::Malicious) {
      EXPECT_GE(bss->size, 8192u);
    } else {
      EXPECT_LT(bss->size, 8192u);
    }
  }
}

TEST(Generator, CfgExportedAlongsideEachBinary) {
  REQUIRE_TOOLCHAIN();
  const auto& c = small_corpus();
  double benign_back = 0, malicious_branch = 0;
  for (const auto& e : c.entries()) {
    ASSERT_FALSE(e.cfg_path.empty());
    const auto g = c.cfg(e);
    ASSERT_TRUE(g.has_value());
    EXPECT_GE(g->num_nodes(), 5u);
    std::size_t back = 0, fanout = 0;
    const auto succ = g->successors();
    for (const auto& [a, b] : g->edges()) back += g->nodes()[b].start <= g->nodes()[a].start ? 1 : 0;
    for (const auto& s : succ) fanout = std::max(fanout, s.size());
    if (e.label == Label::Benign) benign_back += static_cast<double>(back);
    if (e.label == Label::Malicious) malicious_branch += static_cast<double>(fanout);
  }
  EXPECT_GT(benign_back, 0.0);
  EXPECT_GT(malicious_branch / 10.0, 2.0);
}

TEST(Generator, Preconditions) {
  EXPECT_EQ(code_of([] { generate_synthetic_corpus(9, 10, 1, fresh("corpus-d")); }), ErrorCode::InvalidArgument);
  GeneratorOptions opts;
  opts.compiler = "/nonexistent/cc";
  opts.allow_fallback = false;
  EXPECT_EQ(code_of([&] { generate_synthetic_corpus(10, 10, 1, fresh("corpus-e"), opts); }),
            ErrorCode::ToolchainMissing);
}

TEST(Generator, FallbackPoolWithoutCompiler) {
  GeneratorOptions opts;
  opts.compiler = "/nonexistent/cc";
  const auto c = generate_synthetic_corpus(10, 10, 1, fresh("corpus-f"), opts);
  ASSERT_EQ(c.entries().size(), 20u);
  for (const auto& e : c.entries()) {
    const auto elf = parse_elf(c.read(e));
    EXPECT_EQ(elf.find_section(".payload") != nullptr, e.label == Label::Malicious);
    EXPECT_TRUE(c.cfg(e).has_value());
  }
}

TEST(Manifest, LineRoundTrip) {
  CorpusEntry e;
  e.digest = std::string(64, 'a');
  e.path = "original/b_0001";
  e.label = Label::Benign;
  e.lineage = Lineage::Stripped;
  e.family = "mirai";
  e.opt_level = "standard";
  e.cfg_path = "cfg/b_0001.cfg.json";
  e.parent = std::string(64, 'b');
  const auto back = parse_manifest_line(manifest_line(e));
  EXPECT_EQ(back.digest, e.digest);
  EXPECT_EQ(back.path, e.path);
  EXPECT_EQ(back.label, e.label);
  EXPECT_EQ(back.lineage, e.lineage);
  EXPECT_EQ(back.family, e.family);
  EXPECT_EQ(back.opt_level, e.opt_level);
  EXPECT_EQ(back.cfg_path, e.cfg_path);
  EXPECT_EQ(back.parent, e.parent);
  EXPECT_EQ(code_of([] { parse_manifest_line("{not json"); }), ErrorCode::SchemaError);
}

TEST(Manifest, LoadChecksInvariants) {
  const auto dir = fresh("manifest-load");
  fs::create_directories(dir);
  write_file((dir / "x").string(), Bytes{1, 2, 3});
  auto line = [](const std::string& digest, const std::string& path, const std::string& label) {
    CorpusEntry e;
    e.digest = digest;
    e.path = path;
    e.label = label == "benign" ? Label::Benign : label == "malicious" ? Label::Malicious : Label::Unknown;
    return manifest_line(e);
  };
  write_text((dir / "manifest.jsonl").string(), line("d1", "x", "benign") + "\n");
  EXPECT_EQ(Corpus::load(dir).entries().size(), 1u);
  write_text((dir / "manifest.jsonl").string(), line("d1", "missing", "benign") + "\n");
  EXPECT_EQ(code_of([&] { Corpus::load(dir); }), ErrorCode::IoError);
  write_text((dir / "manifest.jsonl").string(), line("d1", "x", "benign") + "\n" + line("d1", "x", "malicious") + "\n");
  EXPECT_EQ(code_of([&] { Corpus::load(dir); }), ErrorCode::SchemaError);
  write_text((dir / "manifest.jsonl").string(), line("d1", "x", "unknown") + "\n");
  EXPECT_EQ(code_of([&] { Corpus::load(dir); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { Corpus::load(dir / "nope"); }), ErrorCode::IoError);
}

TEST(Manipulation, LineagesTraceToOriginals) {
  REQUIRE_TOOLCHAIN();
  const auto dir = fresh("corpus-m");
  fs::copy(small_corpus().root(), dir, fs::copy_options::recursive);
  Corpus c = Corpus::load(dir);
  manipulate_corpus(c, {ManipulationOp::Pack, ManipulationOp::PackBest, ManipulationOp::Strip, ManipulationOp::Pad},
                    3);
  const auto originals = c.with_lineage(Lineage::Original);
  std::set<std::string> original_digests;
  for (const auto& e : originals) original_digests.insert(e.digest);
  for (auto l : {Lineage::Packed, Lineage::PackedBest, Lineage::Stripped, Lineage::Padded}) {
    const auto set = c.with_lineage(l);
    EXPECT_EQ(set.size(), originals.size()) << to_string(l);
    for (const auto& e : set) {
      EXPECT_TRUE(original_digests.count(e.parent)) << e.path;
      const auto* parent = c.find(e.parent, Lineage::Original);
      ASSERT_NE(parent, nullptr);
      EXPECT_EQ(e.label, parent->label);
      EXPECT_EQ(c.read(e).sha256(), e.digest);
    }
  }
  const auto reloaded = Corpus::load(dir);
  EXPECT_EQ(reloaded.entries().size(), 5 * originals.size());

  // A second pass adds nothing.
  manipulate_corpus(c, {ManipulationOp::Pack, ManipulationOp::Strip}, 3);
  EXPECT_EQ(c.entries().size(), 5 * originals.size());
}

TEST(Manipulation, VariantsBehaveAsDocumented) {
  REQUIRE_TOOLCHAIN();
  const auto dir = fresh("corpus-n");
  fs::copy(small_corpus().root(), dir, fs::copy_options::recursive);
  Corpus c = Corpus::load(dir);
  manipulate_corpus(c, {ManipulationOp::Pack, ManipulationOp::Strip, ManipulationOp::Pad}, 3);
  for (const auto& e : c.entries()) {
    if (e.lineage == Lineage::Original) continue;
    const auto* parent = c.find(e.parent, Lineage::Original);
    const RawBinary orig = c.read(*parent);
    const RawBinary raw = c.read(e);
    switch (e.lineage) {
      case Lineage::Packed: {
        EXPECT_EQ(unpack_binary(raw).bytes(), orig.bytes());
        const auto g = c.cfg(e);
        ASSERT_TRUE(g.has_value());
        EXPECT_EQ(g->num_nodes(), 1u);
        EXPECT_EQ(g->num_edges(), 0u);
        break;
      }
      case Lineage::Stripped: {
        EXPECT_EQ(parse_elf(raw).symbols.size(), 0u);
        EXPECT_EQ(e.cfg_path, parent->cfg_path);
        const auto a = testing::run_binary(orig, "m_orig");
        const auto b = testing::run_binary(raw, "m_stripped");
        EXPECT_EQ(a.status, b.status);
        EXPECT_EQ(a.output, b.output);
        break;
      }
      case Lineage::Padded: {
        EXPECT_EQ(raw.size(), 2 * orig.size());
        EXPECT_TRUE(std::equal(orig.bytes().begin(), orig.bytes().end(), raw.bytes().begin()));
        EXPECT_EQ(testing::run_binary(raw, "m_padded").output, testing::run_binary(orig, "m_orig2").output);
        break;
      }
      default: break;
    }
  }
}

TEST(Manipulation, ParseOps) {
  EXPECT_EQ(parse_manipulation("pack"), ManipulationOp::Pack);
  EXPECT_EQ(parse_manipulation("pack-best"), ManipulationOp::PackBest);
  EXPECT_EQ(parse_manipulation("strip"), ManipulationOp::Strip);
  EXPECT_EQ(parse_manipulation("pad"), ManipulationOp::Pad);
  EXPECT_EQ(code_of([] { parse_manipulation("upx"); }), ErrorCode::InvalidArgument);
}

TEST(Ingest, PicksUpBinariesAndCfgs) {
  REQUIRE_TOOLCHAIN();
  const auto src = fresh("ingest-src");
  fs::create_directories(src);
  const auto& c = small_corpus();
  const auto& e = c.entries().front();
  fs::copy_file(c.root() / e.path, src / "one");
  fs::copy_file(c.root() / e.cfg_path, src / "one.cfg.json");
  write_text((src / "notes.txt").string(), "not an elf");
  const auto out = fresh("ingest-out");
  const auto ingested = ingest_directory(src, Label::Malicious, out);
  ASSERT_EQ(ingested.entries().size(), 1u);
  EXPECT_EQ(ingested.entries()[0].digest, e.digest);
  EXPECT_EQ(ingested.entries()[0].label, Label::Malicious);
  EXPECT_TRUE(Corpus::load(out).cfg(Corpus::load(out).entries()[0]).has_value());
  // Re-ingesting the same directory is a no-op.
  EXPECT_EQ(ingest_directory(src, Label::Malicious, out).entries().size(), 1u);
}

}  // namespace
}  // namespace brt
