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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brt/common.hpp"

namespace brt {

enum class Label { Benign, Malicious, Unknown };
enum class Lineage { Original, Packed, PackedBest, Stripped, Padded };

std::string_view to_string(Label label);
std::string_view to_string(Lineage lineage);
Label parse_label(std::string_view text);
Lineage parse_lineage(std::string_view text);

/// An immutable file image plus its digest and provenance.
class RawBinary {
 public:
  RawBinary() : RawBinary(Bytes{}) {}
  explicit RawBinary(Bytes bytes, Label label = Label::Unknown, Lineage lineage = Lineage::Original);

  const Bytes& bytes() const noexcept { return bytes_; }
  ByteView view() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  const std::string& sha256() const noexcept { return sha256_; }
  Label label() const noexcept { return label_; }
  Lineage lineage() const noexcept { return lineage_; }

  RawBinary with_lineage(Lineage lineage) const { return RawBinary(bytes_, label_, lineage); }

 private:
  Bytes bytes_;
  std::string sha256_;
  Label label_ = Label::Unknown;
  Lineage lineage_ = Lineage::Original;
};

namespace elf {
// Subset of the generic ABI constants the toolkit touches.
inline constexpr std::uint32_t SHT_NULL = 0;
inline constexpr std::uint32_t SHT_PROGBITS = 1;
inline constexpr std::uint32_t SHT_SYMTAB = 2;
inline constexpr std::uint32_t SHT_STRTAB = 3;
inline constexpr std::uint32_t SHT_RELA = 4;
inline constexpr std::uint32_t SHT_NOBITS = 8;
inline constexpr std::uint32_t SHT_REL = 9;
inline constexpr std::uint32_t SHT_DYNSYM = 11;

inline constexpr std::uint64_t SHF_WRITE = 0x1;
inline constexpr std::uint64_t SHF_ALLOC = 0x2;
inline constexpr std::uint64_t SHF_EXECINSTR = 0x4;
inline constexpr std::uint64_t SHF_INFO_LINK = 0x40;

inline constexpr std::uint32_t PT_NULL = 0;
inline constexpr std::uint32_t PT_LOAD = 1;
inline constexpr std::uint32_t PT_DYNAMIC = 2;
inline constexpr std::uint32_t PT_INTERP = 3;

inline constexpr std::uint32_t PF_X = 0x1;
inline constexpr std::uint32_t PF_W = 0x2;
inline constexpr std::uint32_t PF_R = 0x4;

inline constexpr std::uint16_t SHN_UNDEF = 0;
inline constexpr std::uint16_t SHN_XINDEX = 0xffff;
}  // namespace elf

struct ElfHeader {
  int elf_class = 64;  // 32 or 64
  bool little_endian = true;
  std::uint16_t type = 0;
  std::uint16_t machine = 0;
  std::uint64_t entry_vaddr = 0;
  std::uint64_t phoff = 0;
  std::uint64_t shoff = 0;
  std::uint16_t ehsize = 0;
  std::uint16_t phentsize = 0;
  std::uint16_t phnum = 0;
  std::uint16_t shentsize = 0;
  std::uint32_t shnum = 0;
  std::uint32_t shstrndx = 0;

  bool operator==(const ElfHeader&) const = default;
};

struct Section {
  std::string name;
  std::uint32_t sh_type = 0;
  std::uint64_t flags = 0;
  std::uint64_t addr = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
  std::uint32_t link = 0;
  std::uint32_t info = 0;
  std::uint64_t addralign = 0;
  std::uint64_t entsize = 0;
  Bytes content;  // empty for NOBITS

  bool alloc() const { return (flags & elf::SHF_ALLOC) != 0; }
  bool write() const { return (flags & elf::SHF_WRITE) != 0; }
  bool exec() const { return (flags & elf::SHF_EXECINSTR) != 0; }
  bool nobits() const { return sh_type == elf::SHT_NOBITS; }

  bool operator==(const Section&) const = default;
};

struct Segment {
  std::uint32_t p_type = 0;
  std::uint32_t flags = 0;
  std::uint64_t offset = 0;
  std::uint64_t vaddr = 0;
  std::uint64_t paddr = 0;
  std::uint64_t filesz = 0;
  std::uint64_t memsz = 0;
  std::uint64_t align = 0;

  bool operator==(const Segment&) const = default;
};

enum class SymbolBind { Local, Global, Weak, Other };
enum class SymbolType { Func, Object, Other };
enum class SymbolTable { Static, Dynamic };

struct SymbolEntry {
  std::string name;
  std::uint64_t value = 0;
  std::uint64_t size = 0;
  SymbolBind bind = SymbolBind::Local;
  SymbolType sym_type = SymbolType::Other;
  SymbolTable table = SymbolTable::Static;
  std::uint16_t shndx = 0;

  bool operator==(const SymbolEntry&) const = default;
};

/// Structured, read-only view of an ELF file. Section contents are copied
/// out so that the image does not borrow from the RawBinary.
struct ElfImage {
  ElfHeader header;
  std::vector<Section> sections;  // index 0 is the null section when present
  std::vector<Segment> segments;
  std::vector<SymbolEntry> symbols;      // .symtab minus the null entry
  std::vector<SymbolEntry> dyn_symbols;  // .dynsym minus the null entry
  bool has_section_header_table = false;

  const Section* find_section(std::string_view name) const;
};

/// Parses a 32/64-bit, little/big-endian ELF file.
/// Throws Error{NotElf | TruncatedFile | MalformedTable}.
ElfImage parse_elf(const RawBinary& raw);
ElfImage parse_elf(ByteView bytes);

/// Every maximal run of at least `min_len` printable ASCII bytes (0x20-0x7e),
/// in file order.
std::vector<std::string> extract_strings(ByteView bytes, std::size_t min_len = 4);
inline std::vector<std::string> extract_strings(const RawBinary& raw, std::size_t min_len = 4) {
  return extract_strings(raw.view(), min_len);
}

std::array<std::uint64_t, 256> byte_histogram(ByteView bytes);

/// Assembles small ELF files from section and segment descriptions. Used by
/// the surrogate packer and by test fixtures that need big-endian or 32-bit
/// inputs no local toolchain can produce.
class ElfBuilder {
 public:
  struct SectionSpec {
    std::string name;
    std::uint32_t sh_type = elf::SHT_PROGBITS;
    std::uint64_t flags = 0;
    std::uint64_t addr = 0;
    Bytes content;
    std::uint64_t nobits_size = 0;
    std::uint32_t link = 0;
    std::uint32_t info = 0;
    std::uint64_t align = 1;
    std::uint64_t entsize = 0;
  };
  /// A segment spans a contiguous run of sections (1-based indices into the
  /// section list, as they will appear in the header table) or, when
  /// `first_section` is 0, the whole file from offset 0.
  struct SegmentSpec {
    std::uint32_t p_type = elf::PT_LOAD;
    std::uint32_t flags = elf::PF_R;
    std::size_t first_section = 0;
    std::size_t last_section = 0;
    std::uint64_t vaddr = 0;
    std::uint64_t extra_memsz = 0;
    std::uint64_t align = 0x1000;
  };
  struct SymbolSpec {
    std::string name;
    std::uint64_t value = 0;
    std::uint64_t size = 0;
    SymbolBind bind = SymbolBind::Global;
    SymbolType sym_type = SymbolType::Func;
    std::uint16_t shndx = 1;
  };

  ElfBuilder(int elf_class, bool little_endian, std::uint16_t machine);

  ElfBuilder& entry(std::uint64_t vaddr);
  ElfBuilder& type(std::uint16_t e_type);
  ElfBuilder& section_headers(bool emit);
  /// Returns the 1-based section index the section will receive.
  std::size_t add_section(SectionSpec spec);
  /// Adds a symbol table + string table pair (dynamic selects .dynsym/.dynstr).
  std::size_t add_symbol_table(const std::vector<SymbolSpec>& symbols, bool dynamic);
  ElfBuilder& add_segment(SegmentSpec spec);
  /// Raw bytes placed right after the program header table and before any
  /// section content.
  ElfBuilder& prologue(Bytes bytes);

  Bytes build() const;

 private:
  int elf_class_;
  bool little_endian_;
  std::uint16_t machine_;
  std::uint16_t e_type_ = 2;
  std::uint64_t entry_ = 0;
  bool emit_section_headers_ = true;
  Bytes prologue_;
  std::vector<SectionSpec> sections_;
  std::vector<SegmentSpec> segments_;
};

}  // namespace brt
