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

#include <cstdio>
#include <set>
#include <sstream>

#include "brt/elf.hpp"
#include "fixtures.hpp"

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

std::string shell(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  return out;
}

TEST(ParseElf, ShortInputIsTruncated) {
  Bytes four{'E', 'L', 'F', '?'};
  EXPECT_EQ(code_of([&] { parse_elf(four); }), ErrorCode::TruncatedFile);
}

TEST(ParseElf, BadMagicIsNotElf) {
  Bytes junk(128, 0x41);
  EXPECT_EQ(code_of([&] { parse_elf(junk); }), ErrorCode::NotElf);
}

TEST(ParseElf, HostBinaryMatchesReadelf) {
  auto path = testing::compile_c("elf_hello", testing::kHelloSource, "-O1 -g");
  if (path.empty()) GTEST_SKIP() << "no C compiler";
  RawBinary raw(read_file(path.string()));
  ElfImage img = parse_elf(raw);
  const Section* text = img.find_section(".text");
  ASSERT_NE(text, nullptr);
  EXPECT_TRUE(text->exec());
  EXPECT_TRUE(text->alloc());

  // Section names as listed by binutils.
  std::istringstream names(shell("readelf -SW '" + path.string() + "' | sed -n 's/^ *\\[ *[0-9]*\\] \\([^ ]*\\).*/\\1/p'"));
  std::vector<std::string> expected;
  for (std::string line; std::getline(names, line);) {
    if (!line.empty() && line != "NULL") expected.push_back(line);
  }
  std::vector<std::string> got;
  for (std::size_t i = 1; i < img.sections.size(); ++i) got.push_back(img.sections[i].name);
  EXPECT_EQ(got, expected);

  // Symbol counts against nm.
  const auto nm_static = shell("nm -a '" + path.string() + "' | wc -l");
  const auto nm_dynamic = shell("nm -D '" + path.string() + "' | wc -l");
  std::size_t static_count = 0;
  for (const auto& s : img.symbols) static_count += 1;
  EXPECT_EQ(static_count, std::stoul(nm_static));
  EXPECT_EQ(img.dyn_symbols.size(), std::stoul(nm_dynamic));

  for (const auto& s : img.sections) {
    if (!s.nobits()) {
      EXPECT_EQ(s.content.size(), s.size) << s.name;
    }
  }
}

TEST(ParseElf, TruncatedSectionTable) {
  auto path = testing::compile_c("elf_trunc", testing::kHelloSource);
  if (path.empty()) GTEST_SKIP() << "no C compiler";
  Bytes bytes = read_file(path.string());
  ElfImage img = parse_elf(bytes);
  bytes.resize(img.header.shoff + 10);
  EXPECT_EQ(code_of([&] { parse_elf(bytes); }), ErrorCode::TruncatedFile);
}

TEST(ParseElf, BuilderRoundTripBigEndian32) {
  for (bool le : {true, false}) {
    for (int cls : {32, 64}) {
      ElfBuilder b(cls, le, 8);
      b.entry(0x1000);
      const auto text = b.add_section({.name = ".text", .flags = elf::SHF_ALLOC | elf::SHF_EXECINSTR,
                                       .addr = 0x1000, .content = Bytes(40, 0x90), .align = 16});
      b.add_section({.name = ".data", .flags = elf::SHF_ALLOC | elf::SHF_WRITE, .addr = 0x2000,
                     .content = Bytes{'h', 'e', 'l', 'l', 'o', 0}, .align = 4});
      b.add_section({.name = ".bss", .sh_type = elf::SHT_NOBITS, .flags = elf::SHF_ALLOC | elf::SHF_WRITE,
                     .addr = 0x3000, .nobits_size = 64, .align = 8});
      b.add_symbol_table({{"main", 0x1000, 10, SymbolBind::Global, SymbolType::Func, 1},
                          {"table", 0x2000, 6, SymbolBind::Weak, SymbolType::Object, 2}},
                         false);
      b.add_segment({.flags = elf::PF_R | elf::PF_X, .first_section = text, .last_section = text, .vaddr = 0x1000});
      ElfImage img = parse_elf(b.build());
      EXPECT_EQ(img.header.elf_class, cls);
      EXPECT_EQ(img.header.little_endian, le);
      EXPECT_EQ(img.header.machine, 8);
      EXPECT_EQ(img.header.entry_vaddr, 0x1000u);
      ASSERT_NE(img.find_section(".data"), nullptr);
      EXPECT_EQ(img.find_section(".data")->content, (Bytes{'h', 'e', 'l', 'l', 'o', 0}));
      EXPECT_EQ(img.find_section(".bss")->size, 64u);
      ASSERT_EQ(img.symbols.size(), 2u);
      EXPECT_EQ(img.symbols[0].name, "main");
      EXPECT_EQ(img.symbols[1].bind, SymbolBind::Weak);
      EXPECT_EQ(img.symbols[1].sym_type, SymbolType::Object);
      ASSERT_EQ(img.segments.size(), 1u);
      EXPECT_EQ(img.segments[0].filesz, 40u);
    }
  }
}

TEST(ExtractStrings, SpecExample) {
  const std::string s("ab\0hello\0x", 10);
  Bytes bytes(s.begin(), s.end());
  EXPECT_EQ(extract_strings(bytes), std::vector<std::string>{"hello"});
}

TEST(ExtractStrings, RunsAtBoundariesAndMinLength) {
  const std::string s("abcd\x01xyz\x7f" "0123456789", 19);
  Bytes bytes(s.begin(), s.end());
  EXPECT_EQ(extract_strings(bytes), (std::vector<std::string>{"abcd", "0123456789"}));
  EXPECT_EQ(extract_strings(bytes, 3), (std::vector<std::string>{"abcd", "xyz", "0123456789"}));
  EXPECT_TRUE(extract_strings(Bytes{}).empty());
}

TEST(ByteHistogram, CountsAndSum) {
  Bytes bytes{0, 0, 255};
  auto h = byte_histogram(bytes);
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[255], 1u);
  std::uint64_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, 3u);
}

TEST(RawBinary, DigestIsSha256) {
  RawBinary raw(Bytes{'a', 'b', 'c'});
  EXPECT_EQ(raw.sha256(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace brt
