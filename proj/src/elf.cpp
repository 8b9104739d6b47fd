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

#include "brt/elf.hpp"

#include <algorithm>
#include <map>

namespace brt {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::Malicious: return "malicious";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Lineage lineage) {
  switch (lineage) {
    case Lineage::Original: return "original";
    case Lineage::Packed: return "packed";
    case Lineage::PackedBest: return "packed_best";
    case Lineage::Stripped: return "stripped";
    case Lineage::Padded: return "padded";
  }
  return "original";
}

Label parse_label(std::string_view text) {
  if (text == "benign") return Label::Benign;
  if (text == "malicious" || text == "malware") return Label::Malicious;
  if (text == "unknown") return Label::Unknown;
  throw Error(ErrorCode::InvalidArgument, "unknown label '" + std::string(text) + "'");
}

Lineage parse_lineage(std::string_view text) {
  if (text == "original") return Lineage::Original;
  if (text == "packed") return Lineage::Packed;
  if (text == "packed_best" || text == "packed-best") return Lineage::PackedBest;
  if (text == "stripped") return Lineage::Stripped;
  if (text == "padded") return Lineage::Padded;
  throw Error(ErrorCode::InvalidArgument, "unknown lineage '" + std::string(text) + "'");
}

RawBinary::RawBinary(Bytes bytes, Label label, Lineage lineage)
    : bytes_(std::move(bytes)), sha256_(sha256_hex(bytes_)), label_(label), lineage_(lineage) {}

const Section* ElfImage::find_section(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

struct Reader {
  ByteView data;
  bool le;

  std::uint8_t u8(std::size_t off) const { return load_int<std::uint8_t>(data, off, le); }
  std::uint16_t u16(std::size_t off) const { return load_int<std::uint16_t>(data, off, le); }
  std::uint32_t u32(std::size_t off) const { return load_int<std::uint32_t>(data, off, le); }
  std::uint64_t u64(std::size_t off) const { return load_int<std::uint64_t>(data, off, le); }
};

bool fits(std::uint64_t offset, std::uint64_t size, std::uint64_t total) {
  return offset <= total && size <= total - offset;
}

std::string read_cstring(ByteView table, std::uint64_t index, const std::string& what) {
  if (index >= table.size()) {
    throw Error(ErrorCode::MalformedTable, what + ": name index " + std::to_string(index) +
                                               " outside string table of " +
                                               std::to_string(table.size()) + " bytes");
  }
  std::size_t end = index;
  while (end < table.size() && table[end] != 0) ++end;
  return std::string(reinterpret_cast<const char*>(table.data() + index), end - index);
}

SymbolBind decode_bind(std::uint8_t info) {
  switch (info >> 4) {
    case 0: return SymbolBind::Local;
    case 1: return SymbolBind::Global;
    case 2: return SymbolBind::Weak;
    default: return SymbolBind::Other;
  }
}

SymbolType decode_type(std::uint8_t info) {
  switch (info & 0xf) {
    case 1: return SymbolType::Object;
    case 2: return SymbolType::Func;
    default: return SymbolType::Other;
  }
}

std::vector<SymbolEntry> read_symbols(const Reader& r, bool is64, const std::vector<Section>& sections,
                                      std::size_t index, SymbolTable table) {
  const Section& symtab = sections[index];
  const std::uint64_t entsize = is64 ? 24 : 16;
  if (symtab.link >= sections.size()) {
    throw Error(ErrorCode::MalformedTable, "symbol table '" + symtab.name + "' links to section " +
                                               std::to_string(symtab.link) + " of " +
                                               std::to_string(sections.size()));
  }
  const Section& strtab = sections[symtab.link];
  const std::uint64_t count = symtab.size / entsize;
  std::vector<SymbolEntry> out;
  out.reserve(count > 0 ? count - 1 : 0);
  for (std::uint64_t i = 1; i < count; ++i) {
    const std::size_t off = symtab.offset + i * entsize;
    SymbolEntry sym;
    std::uint32_t name = r.u32(off);
    std::uint8_t info;
    if (is64) {
      info = r.u8(off + 4);
      sym.shndx = r.u16(off + 6);
      sym.value = r.u64(off + 8);
      sym.size = r.u64(off + 16);
    } else {
      sym.value = r.u32(off + 4);
      sym.size = r.u32(off + 8);
      info = r.u8(off + 12);
      sym.shndx = r.u16(off + 14);
    }
    sym.bind = decode_bind(info);
    sym.sym_type = decode_type(info);
    sym.table = table;
    sym.name = read_cstring(strtab.content, name,
                            "symbol " + std::to_string(i) + " of '" + symtab.name + "' at offset " +
                                std::to_string(off));
    out.push_back(std::move(sym));
  }
  return out;
}

}  // namespace

ElfImage parse_elf(const RawBinary& raw) { return parse_elf(raw.view()); }

ElfImage parse_elf(ByteView bytes) {
  const std::uint64_t total = bytes.size();
  if (total < 16) {
    throw Error(ErrorCode::TruncatedFile,
                "ELF identification needs 16 bytes at offset 0, file has " + std::to_string(total));
  }
  if (bytes[0] != 0x7f || bytes[1] != 'E' || bytes[2] != 'L' || bytes[3] != 'F') {
    throw Error(ErrorCode::NotElf, "bad magic at offset 0");
  }
  ElfImage img;
  auto& h = img.header;
  switch (bytes[4]) {
    case 1: h.elf_class = 32; break;
    case 2: h.elf_class = 64; break;
    default: throw Error(ErrorCode::NotElf, "unsupported EI_CLASS " + std::to_string(bytes[4]) + " at offset 4");
  }
  switch (bytes[5]) {
    case 1: h.little_endian = true; break;
    case 2: h.little_endian = false; break;
    default: throw Error(ErrorCode::NotElf, "unsupported EI_DATA " + std::to_string(bytes[5]) + " at offset 5");
  }
  const bool is64 = h.elf_class == 64;
  const std::uint64_t ehsize = is64 ? 64 : 52;
  if (total < ehsize) {
    throw Error(ErrorCode::TruncatedFile, "ELF header needs " + std::to_string(ehsize) +
                                              " bytes at offset 0, file has " + std::to_string(total));
  }
  Reader r{bytes, h.little_endian};
  h.type = r.u16(16);
  h.machine = r.u16(18);
  if (is64) {
    h.entry_vaddr = r.u64(24);
    h.phoff = r.u64(32);
    h.shoff = r.u64(40);
    h.ehsize = r.u16(52);
    h.phentsize = r.u16(54);
    h.phnum = r.u16(56);
    h.shentsize = r.u16(58);
    h.shnum = r.u16(60);
    h.shstrndx = r.u16(62);
  } else {
    h.entry_vaddr = r.u32(24);
    h.phoff = r.u32(28);
    h.shoff = r.u32(32);
    h.ehsize = r.u16(40);
    h.phentsize = r.u16(42);
    h.phnum = r.u16(44);
    h.shentsize = r.u16(46);
    h.shnum = r.u16(48);
    h.shstrndx = r.u16(50);
  }

  // Program headers.
  const std::uint64_t phent = is64 ? 56 : 32;
  if (h.phnum > 0) {
    if (h.phentsize < phent) {
      throw Error(ErrorCode::MalformedTable, "program header entry size " + std::to_string(h.phentsize) +
                                                 " at offset " + std::to_string(is64 ? 54 : 42));
    }
    if (!fits(h.phoff, std::uint64_t{h.phnum} * h.phentsize, total)) {
      throw Error(ErrorCode::TruncatedFile, "program header table at offset " + std::to_string(h.phoff) +
                                                " extends past end of file");
    }
  }
  img.segments.reserve(h.phnum);
  for (std::uint32_t i = 0; i < h.phnum; ++i) {
    const std::size_t off = h.phoff + std::uint64_t{i} * h.phentsize;
    Segment s;
    s.p_type = r.u32(off);
    if (is64) {
      s.flags = r.u32(off + 4);
      s.offset = r.u64(off + 8);
      s.vaddr = r.u64(off + 16);
      s.paddr = r.u64(off + 24);
      s.filesz = r.u64(off + 32);
      s.memsz = r.u64(off + 40);
      s.align = r.u64(off + 48);
    } else {
      s.offset = r.u32(off + 4);
      s.vaddr = r.u32(off + 8);
      s.paddr = r.u32(off + 12);
      s.filesz = r.u32(off + 16);
      s.memsz = r.u32(off + 20);
      s.flags = r.u32(off + 24);
      s.align = r.u32(off + 28);
    }
    if (s.p_type != elf::PT_NULL && !fits(s.offset, s.filesz, total)) {
      throw Error(ErrorCode::TruncatedFile, "program header " + std::to_string(i) + " (offset " +
                                                std::to_string(s.offset) + ", filesz " +
                                                std::to_string(s.filesz) + ") extends past end of file");
    }
    if (s.p_type == elf::PT_LOAD && s.memsz < s.filesz) {
      throw Error(ErrorCode::MalformedTable, "program header " + std::to_string(i) + " at offset " +
                                                 std::to_string(off) + " has memsz < filesz");
    }
    img.segments.push_back(s);
  }

  // Section headers.
  if (h.shoff != 0) {
    const std::uint64_t shent = is64 ? 64 : 40;
    if (h.shentsize < shent) {
      throw Error(ErrorCode::MalformedTable, "section header entry size " + std::to_string(h.shentsize) +
                                                 " at offset " + std::to_string(is64 ? 58 : 46));
    }
    if (!fits(h.shoff, shent, total)) {
      throw Error(ErrorCode::TruncatedFile, "section header table at offset " + std::to_string(h.shoff) +
                                                " extends past end of file");
    }
    std::uint64_t shnum = h.shnum;
    std::uint64_t shstrndx = h.shstrndx;
    // Extended numbering lives in the null section header.
    if (shnum == 0) shnum = is64 ? r.u64(h.shoff + 32) : r.u32(h.shoff + 20);
    if (shstrndx == elf::SHN_XINDEX) shstrndx = r.u32(h.shoff + (is64 ? 40 : 24));
    if (!fits(h.shoff, shnum * h.shentsize, total)) {
      throw Error(ErrorCode::TruncatedFile, "section header table at offset " + std::to_string(h.shoff) +
                                                " with " + std::to_string(shnum) +
                                                " entries extends past end of file");
    }
    h.shnum = static_cast<std::uint32_t>(shnum);
    h.shstrndx = static_cast<std::uint32_t>(shstrndx);
    std::vector<std::uint32_t> name_index(shnum);
    img.sections.resize(shnum);
    for (std::uint64_t i = 0; i < shnum; ++i) {
      const std::size_t off = h.shoff + i * h.shentsize;
      Section& s = img.sections[i];
      name_index[i] = r.u32(off);
      s.sh_type = r.u32(off + 4);
      if (is64) {
        s.flags = r.u64(off + 8);
        s.addr = r.u64(off + 16);
        s.offset = r.u64(off + 24);
        s.size = r.u64(off + 32);
        s.link = r.u32(off + 40);
        s.info = r.u32(off + 44);
        s.addralign = r.u64(off + 48);
        s.entsize = r.u64(off + 56);
      } else {
        s.flags = r.u32(off + 8);
        s.addr = r.u32(off + 12);
        s.offset = r.u32(off + 16);
        s.size = r.u32(off + 20);
        s.link = r.u32(off + 24);
        s.info = r.u32(off + 28);
        s.addralign = r.u32(off + 32);
        s.entsize = r.u32(off + 36);
      }
      if (i == 0 && h.shnum != 0 && s.sh_type == elf::SHT_NULL) {
        // The null entry may carry extended-numbering values; never content.
        continue;
      }
      if (!s.nobits() && s.sh_type != elf::SHT_NULL) {
        if (!fits(s.offset, s.size, total)) {
          throw Error(ErrorCode::TruncatedFile, "section " + std::to_string(i) + " (offset " +
                                                    std::to_string(s.offset) + ", size " +
                                                    std::to_string(s.size) + ") extends past end of file");
        }
        s.content.assign(bytes.begin() + static_cast<std::ptrdiff_t>(s.offset),
                         bytes.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size));
      }
    }
    if (shnum > 0) {
      if (shstrndx >= shnum) {
        throw Error(ErrorCode::MalformedTable, "section name table index " + std::to_string(shstrndx) +
                                                   " out of range (" + std::to_string(shnum) +
                                                   " sections), ELF header offset " +
                                                   std::to_string(is64 ? 62 : 50));
      }
      const Bytes& names = img.sections[shstrndx].content;
      for (std::uint64_t i = 0; i < shnum; ++i) {
        if (i == 0 && name_index[i] == 0) continue;
        img.sections[i].name = read_cstring(names, name_index[i],
                                            "section header " + std::to_string(i) + " at offset " +
                                                std::to_string(h.shoff + i * h.shentsize));
      }
    }
    img.has_section_header_table = shnum > 0;
    for (std::size_t i = 0; i < img.sections.size(); ++i) {
      const auto type = img.sections[i].sh_type;
      if (type == elf::SHT_SYMTAB) {
        auto syms = read_symbols(r, is64, img.sections, i, SymbolTable::Static);
        img.symbols.insert(img.symbols.end(), syms.begin(), syms.end());
      } else if (type == elf::SHT_DYNSYM) {
        auto syms = read_symbols(r, is64, img.sections, i, SymbolTable::Dynamic);
        img.dyn_symbols.insert(img.dyn_symbols.end(), syms.begin(), syms.end());
      }
    }
  }
  return img;
}

std::vector<std::string> extract_strings(ByteView bytes, std::size_t min_len) {
  if (min_len == 0) min_len = 1;
  std::vector<std::string> out;
  std::size_t run_start = 0;
  bool in_run = false;
  for (std::size_t i = 0; i <= bytes.size(); ++i) {
    const bool printable = i < bytes.size() && bytes[i] >= 0x20 && bytes[i] <= 0x7e;
    if (printable && !in_run) {
      run_start = i;
      in_run = true;
    } else if (!printable && in_run) {
      in_run = false;
      if (i - run_start >= min_len) {
        out.emplace_back(reinterpret_cast<const char*>(bytes.data() + run_start), i - run_start);
      }
    }
  }
  return out;
}

std::array<std::uint64_t, 256> byte_histogram(ByteView bytes) {
  std::array<std::uint64_t, 256> hist{};
  for (auto b : bytes) ++hist[b];
  return hist;
}

// ---------------------------------------------------------------------------
// ElfBuilder

ElfBuilder::ElfBuilder(int elf_class, bool little_endian, std::uint16_t machine)
    : elf_class_(elf_class), little_endian_(little_endian), machine_(machine) {
  if (elf_class != 32 && elf_class != 64) {
    throw Error(ErrorCode::InvalidArgument, "ELF class must be 32 or 64");
  }
}

ElfBuilder& ElfBuilder::entry(std::uint64_t vaddr) {
  entry_ = vaddr;
  return *this;
}

ElfBuilder& ElfBuilder::type(std::uint16_t e_type) {
  e_type_ = e_type;
  return *this;
}

ElfBuilder& ElfBuilder::section_headers(bool emit) {
  emit_section_headers_ = emit;
  return *this;
}

std::size_t ElfBuilder::add_section(SectionSpec spec) {
  sections_.push_back(std::move(spec));
  return sections_.size();
}

std::size_t ElfBuilder::add_symbol_table(const std::vector<SymbolSpec>& symbols, bool dynamic) {
  const bool is64 = elf_class_ == 64;
  Bytes strtab{0};
  Bytes table(is64 ? 24 : 16, 0);  // null symbol
  std::uint32_t first_global = 1;
  bool seen_global = false;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto& s = symbols[i];
    const auto name_off = static_cast<std::uint32_t>(strtab.size());
    strtab.insert(strtab.end(), s.name.begin(), s.name.end());
    strtab.push_back(0);
    std::uint8_t bind = 0;
    switch (s.bind) {
      case SymbolBind::Local: bind = 0; break;
      case SymbolBind::Global: bind = 1; break;
      case SymbolBind::Weak: bind = 2; break;
      case SymbolBind::Other: bind = 10; break;
    }
    std::uint8_t type = s.sym_type == SymbolType::Func ? 2 : s.sym_type == SymbolType::Object ? 1 : 0;
    const auto info = static_cast<std::uint8_t>((bind << 4) | type);
    if (bind != 0) seen_global = true;
    if (!seen_global) first_global = static_cast<std::uint32_t>(i + 2);
    const std::size_t off = table.size();
    table.resize(off + (is64 ? 24 : 16), 0);
    store_int<std::uint32_t>(table, off, name_off, little_endian_);
    if (is64) {
      table[off + 4] = info;
      store_int<std::uint16_t>(table, off + 6, s.shndx, little_endian_);
      store_int<std::uint64_t>(table, off + 8, s.value, little_endian_);
      store_int<std::uint64_t>(table, off + 16, s.size, little_endian_);
    } else {
      store_int<std::uint32_t>(table, off + 4, static_cast<std::uint32_t>(s.value), little_endian_);
      store_int<std::uint32_t>(table, off + 8, static_cast<std::uint32_t>(s.size), little_endian_);
      table[off + 12] = info;
      store_int<std::uint16_t>(table, off + 14, s.shndx, little_endian_);
    }
  }
  SectionSpec str;
  str.name = dynamic ? ".dynstr" : ".strtab";
  str.sh_type = elf::SHT_STRTAB;
  str.flags = dynamic ? elf::SHF_ALLOC : 0;
  str.content = std::move(strtab);
  const std::size_t str_index = add_section(std::move(str));
  SectionSpec sym;
  sym.name = dynamic ? ".dynsym" : ".symtab";
  sym.sh_type = dynamic ? elf::SHT_DYNSYM : elf::SHT_SYMTAB;
  sym.flags = dynamic ? elf::SHF_ALLOC : 0;
  sym.content = std::move(table);
  sym.link = static_cast<std::uint32_t>(str_index);
  sym.info = first_global;
  sym.align = is64 ? 8 : 4;
  sym.entsize = is64 ? 24 : 16;
  return add_section(std::move(sym));
}

ElfBuilder& ElfBuilder::add_segment(SegmentSpec spec) {
  segments_.push_back(spec);
  return *this;
}

ElfBuilder& ElfBuilder::prologue(Bytes bytes) {
  prologue_ = std::move(bytes);
  return *this;
}

namespace {
std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return a <= 1 ? v : (v + a - 1) / a * a; }
}  // namespace

Bytes ElfBuilder::build() const {
  const bool is64 = elf_class_ == 64;
  const bool le = little_endian_;
  const std::uint64_t ehsize = is64 ? 64 : 52;
  const std::uint64_t phentsize = is64 ? 56 : 32;
  const std::uint64_t shentsize = is64 ? 64 : 40;

  Bytes out(ehsize + phentsize * segments_.size(), 0);
  out.insert(out.end(), prologue_.begin(), prologue_.end());

  // Section payloads.
  std::vector<std::uint64_t> offsets(sections_.size() + 1, 0);
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& s = sections_[i];
    std::uint64_t off = align_up(out.size(), s.align);
    if (s.sh_type != elf::SHT_NOBITS) {
      out.resize(off, 0);
      out.insert(out.end(), s.content.begin(), s.content.end());
    }
    offsets[i + 1] = off;
  }
  const std::uint64_t content_end = out.size();

  // Section name table and header table.
  std::uint64_t shoff = 0;
  std::uint32_t shnum = 0;
  std::uint32_t shstrndx = 0;
  Bytes shstr{0};
  std::vector<std::uint32_t> name_offsets;
  if (emit_section_headers_) {
    std::map<std::string, std::uint32_t> seen;
    auto intern = [&](const std::string& n) {
      auto it = seen.find(n);
      if (it != seen.end()) return it->second;
      auto off = static_cast<std::uint32_t>(shstr.size());
      shstr.insert(shstr.end(), n.begin(), n.end());
      shstr.push_back(0);
      seen.emplace(n, off);
      return off;
    };
    for (const auto& s : sections_) name_offsets.push_back(intern(s.name));
    const std::uint32_t shstr_name = intern(".shstrtab");
    const std::uint64_t shstr_off = out.size();
    out.insert(out.end(), shstr.begin(), shstr.end());
    shoff = align_up(out.size(), is64 ? 8 : 4);
    shnum = static_cast<std::uint32_t>(sections_.size() + 2);
    shstrndx = shnum - 1;
    out.resize(shoff + shentsize * shnum, 0);
    auto write_shdr = [&](std::size_t idx, std::uint32_t name, std::uint32_t type, std::uint64_t flags,
                          std::uint64_t addr, std::uint64_t off, std::uint64_t size, std::uint32_t link,
                          std::uint32_t info, std::uint64_t align, std::uint64_t entsize) {
      const std::size_t base = shoff + idx * shentsize;
      store_int<std::uint32_t>(out, base, name, le);
      store_int<std::uint32_t>(out, base + 4, type, le);
      if (is64) {
        store_int<std::uint64_t>(out, base + 8, flags, le);
        store_int<std::uint64_t>(out, base + 16, addr, le);
        store_int<std::uint64_t>(out, base + 24, off, le);
        store_int<std::uint64_t>(out, base + 32, size, le);
        store_int<std::uint32_t>(out, base + 40, link, le);
        store_int<std::uint32_t>(out, base + 44, info, le);
        store_int<std::uint64_t>(out, base + 48, align, le);
        store_int<std::uint64_t>(out, base + 56, entsize, le);
      } else {
        store_int<std::uint32_t>(out, base + 8, static_cast<std::uint32_t>(flags), le);
        store_int<std::uint32_t>(out, base + 12, static_cast<std::uint32_t>(addr), le);
        store_int<std::uint32_t>(out, base + 16, static_cast<std::uint32_t>(off), le);
        store_int<std::uint32_t>(out, base + 20, static_cast<std::uint32_t>(size), le);
        store_int<std::uint32_t>(out, base + 24, link, le);
        store_int<std::uint32_t>(out, base + 28, info, le);
        store_int<std::uint32_t>(out, base + 32, static_cast<std::uint32_t>(align), le);
        store_int<std::uint32_t>(out, base + 36, static_cast<std::uint32_t>(entsize), le);
      }
    };
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const auto& s = sections_[i];
      const std::uint64_t size = s.sh_type == elf::SHT_NOBITS ? s.nobits_size : s.content.size();
      write_shdr(i + 1, name_offsets[i], s.sh_type, s.flags, s.addr, offsets[i + 1], size, s.link, s.info,
                 s.align, s.entsize);
    }
    write_shdr(shstrndx, shstr_name, elf::SHT_STRTAB, 0, 0, shstr_off, shstr.size(), 0, 0, 1, 0);
  }

  // ELF header.
  out[0] = 0x7f;
  out[1] = 'E';
  out[2] = 'L';
  out[3] = 'F';
  out[4] = is64 ? 2 : 1;
  out[5] = le ? 1 : 2;
  out[6] = 1;
  store_int<std::uint16_t>(out, 16, e_type_, le);
  store_int<std::uint16_t>(out, 18, machine_, le);
  store_int<std::uint32_t>(out, 20, 1, le);
  if (is64) {
    store_int<std::uint64_t>(out, 24, entry_, le);
    store_int<std::uint64_t>(out, 32, segments_.empty() ? 0 : ehsize, le);
    store_int<std::uint64_t>(out, 40, shoff, le);
    store_int<std::uint16_t>(out, 52, static_cast<std::uint16_t>(ehsize), le);
    store_int<std::uint16_t>(out, 54, static_cast<std::uint16_t>(phentsize), le);
    store_int<std::uint16_t>(out, 56, static_cast<std::uint16_t>(segments_.size()), le);
    store_int<std::uint16_t>(out, 58, static_cast<std::uint16_t>(shentsize), le);
    store_int<std::uint16_t>(out, 60, static_cast<std::uint16_t>(shnum), le);
    store_int<std::uint16_t>(out, 62, static_cast<std::uint16_t>(shstrndx), le);
  } else {
    store_int<std::uint32_t>(out, 24, static_cast<std::uint32_t>(entry_), le);
    store_int<std::uint32_t>(out, 28, segments_.empty() ? 0 : static_cast<std::uint32_t>(ehsize), le);
    store_int<std::uint32_t>(out, 32, static_cast<std::uint32_t>(shoff), le);
    store_int<std::uint16_t>(out, 40, static_cast<std::uint16_t>(ehsize), le);
    store_int<std::uint16_t>(out, 42, static_cast<std::uint16_t>(phentsize), le);
    store_int<std::uint16_t>(out, 44, static_cast<std::uint16_t>(segments_.size()), le);
    store_int<std::uint16_t>(out, 46, static_cast<std::uint16_t>(shentsize), le);
    store_int<std::uint16_t>(out, 48, static_cast<std::uint16_t>(shnum), le);
    store_int<std::uint16_t>(out, 50, static_cast<std::uint16_t>(shstrndx), le);
  }

  // Program headers.
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    std::uint64_t off = 0, filesz = 0, memsz = 0, vaddr = seg.vaddr;
    if (seg.first_section == 0) {
      filesz = content_end;
      memsz = filesz + seg.extra_memsz;
    } else {
      if (seg.last_section < seg.first_section || seg.last_section > sections_.size()) {
        throw Error(ErrorCode::InvalidArgument, "segment section range out of bounds");
      }
      off = offsets[seg.first_section];
      std::uint64_t file_end = off;
      std::uint64_t mem_end = off;
      for (std::size_t s = seg.first_section; s <= seg.last_section; ++s) {
        const auto& spec = sections_[s - 1];
        if (spec.sh_type == elf::SHT_NOBITS) {
          mem_end = std::max(mem_end, offsets[s] + spec.nobits_size);
        } else {
          file_end = std::max(file_end, offsets[s] + spec.content.size());
          mem_end = std::max(mem_end, file_end);
        }
      }
      filesz = file_end - off;
      memsz = mem_end - off + seg.extra_memsz;
      if (vaddr == 0) vaddr = sections_[seg.first_section - 1].addr;
    }
    const std::size_t base = ehsize + i * phentsize;
    store_int<std::uint32_t>(out, base, seg.p_type, le);
    if (is64) {
      store_int<std::uint32_t>(out, base + 4, seg.flags, le);
      store_int<std::uint64_t>(out, base + 8, off, le);
      store_int<std::uint64_t>(out, base + 16, vaddr, le);
      store_int<std::uint64_t>(out, base + 24, vaddr, le);
      store_int<std::uint64_t>(out, base + 32, filesz, le);
      store_int<std::uint64_t>(out, base + 40, memsz, le);
      store_int<std::uint64_t>(out, base + 48, seg.align, le);
    } else {
      store_int<std::uint32_t>(out, base + 4, static_cast<std::uint32_t>(off), le);
      store_int<std::uint32_t>(out, base + 8, static_cast<std::uint32_t>(vaddr), le);
      store_int<std::uint32_t>(out, base + 12, static_cast<std::uint32_t>(vaddr), le);
      store_int<std::uint32_t>(out, base + 16, static_cast<std::uint32_t>(filesz), le);
      store_int<std::uint32_t>(out, base + 20, static_cast<std::uint32_t>(memsz), le);
      store_int<std::uint32_t>(out, base + 24, seg.flags, le);
      store_int<std::uint32_t>(out, base + 28, static_cast<std::uint32_t>(seg.align), le);
    }
  }
  return out;
}

}  // namespace brt
