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

#include "brt/transform.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <random>

namespace brt {

namespace {

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return a <= 1 ? v : (v + a - 1) / a * a; }

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

bool is_debug_name(std::string_view name) {
  return starts_with(name, ".debug") || starts_with(name, ".zdebug") || starts_with(name, ".rela.debug") ||
         starts_with(name, ".rel.debug");
}

void write_shdr(Bytes& out, std::size_t base, bool is64, bool le, std::uint32_t name, const Section& s,
                std::uint64_t offset, std::uint64_t size, std::uint32_t link, std::uint32_t info) {
  store_int<std::uint32_t>(out, base, name, le);
  store_int<std::uint32_t>(out, base + 4, s.sh_type, le);
  if (is64) {
    store_int<std::uint64_t>(out, base + 8, s.flags, le);
    store_int<std::uint64_t>(out, base + 16, s.addr, le);
    store_int<std::uint64_t>(out, base + 24, offset, le);
    store_int<std::uint64_t>(out, base + 32, size, le);
    store_int<std::uint32_t>(out, base + 40, link, le);
    store_int<std::uint32_t>(out, base + 44, info, le);
    store_int<std::uint64_t>(out, base + 48, s.addralign, le);
    store_int<std::uint64_t>(out, base + 56, s.entsize, le);
  } else {
    store_int<std::uint32_t>(out, base + 8, static_cast<std::uint32_t>(s.flags), le);
    store_int<std::uint32_t>(out, base + 12, static_cast<std::uint32_t>(s.addr), le);
    store_int<std::uint32_t>(out, base + 16, static_cast<std::uint32_t>(offset), le);
    store_int<std::uint32_t>(out, base + 20, static_cast<std::uint32_t>(size), le);
    store_int<std::uint32_t>(out, base + 24, link, le);
    store_int<std::uint32_t>(out, base + 28, info, le);
    store_int<std::uint32_t>(out, base + 32, static_cast<std::uint32_t>(s.addralign), le);
    store_int<std::uint32_t>(out, base + 36, static_cast<std::uint32_t>(s.entsize), le);
  }
}

}  // namespace

RawBinary strip_binary(const RawBinary& raw) {
  const ElfImage img = parse_elf(raw);
  if (!img.has_section_header_table) return raw.with_lineage(Lineage::Stripped);

  const auto& h = img.header;
  const bool is64 = h.elf_class == 64;
  const bool le = h.little_endian;
  const std::size_t n = img.sections.size();

  std::vector<bool> removed(n, false);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& s = img.sections[i];
    if (s.sh_type == elf::SHT_SYMTAB || is_debug_name(s.name)) removed[i] = true;
  }
  // String tables only referenced by removed symbol tables go with them.
  for (std::size_t i = 1; i < n; ++i) {
    const auto& s = img.sections[i];
    if (s.sh_type != elf::SHT_STRTAB || s.alloc() || i == h.shstrndx) continue;
    bool used_by_kept = false;
    bool used_by_removed = false;
    for (std::size_t j = 1; j < n; ++j) {
      if (img.sections[j].link != i) continue;
      (removed[j] ? used_by_removed : used_by_kept) = true;
    }
    if ((used_by_removed && !used_by_kept) || (s.name == ".strtab" && !used_by_kept)) removed[i] = true;
  }

  // Everything the loader can see stays where it is.
  std::uint64_t prefix = std::max<std::uint64_t>(h.ehsize, is64 ? 64 : 52);
  prefix = std::max<std::uint64_t>(prefix, h.phoff + std::uint64_t{h.phnum} * h.phentsize);
  for (const auto& seg : img.segments) prefix = std::max(prefix, seg.offset + seg.filesz);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& s = img.sections[i];
    if (!removed[i] && s.alloc() && !s.nobits()) prefix = std::max(prefix, s.offset + s.size);
  }
  prefix = std::min<std::uint64_t>(prefix, raw.size());

  Bytes out(raw.bytes().begin(), raw.bytes().begin() + static_cast<std::ptrdiff_t>(prefix));
  auto covered_by_segment = [&](std::uint64_t off, std::uint64_t size) {
    for (const auto& seg : img.segments) {
      if (off < seg.offset + seg.filesz && seg.offset < off + size) return true;
    }
    return false;
  };
  for (std::size_t i = 1; i < n; ++i) {
    const auto& s = img.sections[i];
    if (removed[i] && !s.nobits() && s.offset < prefix && !covered_by_segment(s.offset, s.size)) {
      const auto end = std::min<std::uint64_t>(prefix, s.offset + s.size);
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(s.offset), out.begin() + static_cast<std::ptrdiff_t>(end), 0);
    }
  }

  // New numbering and a rebuilt section-name table.
  std::vector<std::uint32_t> new_index(n, 0);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || !removed[i]) {
      new_index[i] = static_cast<std::uint32_t>(kept.size());
      kept.push_back(i);
    }
  }
  Bytes names{0};
  std::map<std::string, std::uint32_t> name_offset;
  std::vector<std::uint32_t> section_name(n, 0);
  for (std::size_t i : kept) {
    if (i == 0) continue;
    const auto& nm = img.sections[i].name;
    auto it = name_offset.find(nm);
    if (it == name_offset.end()) {
      it = name_offset.emplace(nm, static_cast<std::uint32_t>(names.size())).first;
      names.insert(names.end(), nm.begin(), nm.end());
      names.push_back(0);
    }
    section_name[i] = it->second;
  }

  // Relocate non-loaded sections that lived past the prefix.
  std::vector<std::uint64_t> new_offset(n, 0);
  std::vector<std::uint64_t> new_size(n, 0);
  for (std::size_t i : kept) {
    const auto& s = img.sections[i];
    new_offset[i] = s.offset;
    new_size[i] = s.size;
    if (i == 0) continue;
    const bool is_names = i == h.shstrndx;
    const bool in_prefix = s.offset + s.size <= prefix;
    if (s.alloc() || (in_prefix && !is_names)) continue;
    if (s.nobits()) {
      new_offset[i] = out.size();
      continue;
    }
    const Bytes& content = is_names ? names : s.content;
    const std::uint64_t off = align_up(out.size(), std::max<std::uint64_t>(1, s.addralign));
    out.resize(off, 0);
    out.insert(out.end(), content.begin(), content.end());
    new_offset[i] = off;
    new_size[i] = content.size();
  }

  const std::uint64_t shentsize = is64 ? 64 : 40;
  const std::uint64_t shoff = align_up(out.size(), is64 ? 8 : 4);
  out.resize(shoff + shentsize * kept.size(), 0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t i = kept[k];
    if (i == 0) continue;  // null header stays zero
    const auto& s = img.sections[i];
    std::uint32_t link = (s.link < n && !removed[s.link]) ? new_index[s.link] : 0;
    std::uint32_t info = s.info;
    const bool info_is_index =
        (s.flags & elf::SHF_INFO_LINK) != 0 || s.sh_type == elf::SHT_REL || s.sh_type == elf::SHT_RELA;
    if (info_is_index && info != 0) info = (info < n && !removed[info]) ? new_index[info] : 0;
    write_shdr(out, shoff + k * shentsize, is64, le, section_name[i], s, new_offset[i], new_size[i], link, info);
  }

  const std::uint32_t shstrndx = h.shstrndx < n && !removed[h.shstrndx] ? new_index[h.shstrndx] : 0;
  if (is64) {
    store_int<std::uint64_t>(out, 40, shoff, le);
    store_int<std::uint16_t>(out, 58, static_cast<std::uint16_t>(shentsize), le);
    store_int<std::uint16_t>(out, 60, static_cast<std::uint16_t>(kept.size()), le);
    store_int<std::uint16_t>(out, 62, static_cast<std::uint16_t>(shstrndx), le);
  } else {
    store_int<std::uint32_t>(out, 32, static_cast<std::uint32_t>(shoff), le);
    store_int<std::uint16_t>(out, 46, static_cast<std::uint16_t>(shentsize), le);
    store_int<std::uint16_t>(out, 48, static_cast<std::uint16_t>(kept.size()), le);
    store_int<std::uint16_t>(out, 50, static_cast<std::uint16_t>(shstrndx), le);
  }
  return RawBinary(std::move(out), raw.label(), Lineage::Stripped);
}

RawBinary pad_binary(const RawBinary& raw, ByteView tail) {
  if (tail.empty()) throw Error(ErrorCode::InvalidArgument, "padding tail must be non-empty");
  Bytes out;
  out.reserve(raw.size() + tail.size());
  out.insert(out.end(), raw.bytes().begin(), raw.bytes().end());
  out.insert(out.end(), tail.begin(), tail.end());
  return RawBinary(std::move(out), raw.label(), Lineage::Padded);
}

std::string_view to_string(PackLevel level) { return level == PackLevel::Best ? "best" : "default"; }

RawBinary pack_binary(const RawBinary& raw, PackLevel level) {
  const ElfImage img = parse_elf(raw);
  const bool has_load = std::any_of(img.segments.begin(), img.segments.end(),
                                    [](const Segment& s) { return s.p_type == elf::PT_LOAD; });
  if (!has_load) throw Error(ErrorCode::NoLoadSegments, "input has no PT_LOAD segment");

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  Bytes payload(bound);
  const int zlevel = level == PackLevel::Best ? 9 : 6;
  if (compress2(payload.data(), &bound, raw.bytes().data(), static_cast<uLong>(raw.size()), zlevel) != Z_OK) {
    throw Error(ErrorCode::CorruptPayload, "deflate failed");
  }
  payload.resize(bound);

  Bytes container(kPackHeaderSize, 0);
  std::memcpy(container.data(), "SPK1", 4);
  store_int<std::uint32_t>(container, 4, kPackVersion, true);
  store_int<std::uint64_t>(container, 8, raw.size(), true);
  const auto digest = sha256_raw(raw.view());
  std::copy(digest.begin(), digest.end(), container.begin() + 16);
  container.insert(container.end(), payload.begin(), payload.end());

  const bool is64 = img.header.elf_class == 64;
  const std::uint64_t base = is64 ? 0x400000 : 0x8048000;
  const std::uint64_t header_bytes = (is64 ? 64 : 52) + (is64 ? 56 : 32);
  ElfBuilder builder(img.header.elf_class, img.header.little_endian, img.header.machine);
  builder.type(2)
      .entry(base + header_bytes)
      .section_headers(false)
      .prologue(std::move(container))
      .add_segment({elf::PT_LOAD, elf::PF_R | elf::PF_X, 0, 0, base, 0, 0x1000});
  return RawBinary(builder.build(), raw.label(),
                   level == PackLevel::Best ? Lineage::PackedBest : Lineage::Packed);
}

std::optional<std::size_t> find_pack_container(ByteView bytes) {
  ElfImage img;
  try {
    img = parse_elf(bytes);
  } catch (const Error&) {
    return std::nullopt;
  }
  const std::uint64_t off = img.header.phoff + std::uint64_t{img.header.phnum} * img.header.phentsize;
  if (img.header.phnum == 0 || off + kPackHeaderSize > bytes.size()) return std::nullopt;
  if (std::memcmp(bytes.data() + off, "SPK1", 4) != 0) return std::nullopt;
  return static_cast<std::size_t>(off);
}

ByteView packed_payload(ByteView bytes) {
  auto off = find_pack_container(bytes);
  if (!off) throw Error(ErrorCode::NotPackedBySurrogate, "container marker 'SPK1' not found");
  return bytes.subspan(*off + kPackHeaderSize);
}

RawBinary unpack_binary(const RawBinary& raw) {
  auto off = find_pack_container(raw.view());
  if (!off) throw Error(ErrorCode::NotPackedBySurrogate, "container marker 'SPK1' not found");
  const ByteView header = raw.view().subspan(*off, kPackHeaderSize);
  const auto version = load_int<std::uint32_t>(header, 4, true);
  if (version != kPackVersion) {
    throw Error(ErrorCode::CorruptPayload, "unsupported container version " + std::to_string(version));
  }
  const auto original_size = load_int<std::uint64_t>(header, 8, true);
  const ByteView payload = raw.view().subspan(*off + kPackHeaderSize);

  Bytes out(original_size);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error(ErrorCode::CorruptPayload, "inflateInit failed");
  zs.next_in = const_cast<Bytef*>(payload.data());
  zs.avail_in = static_cast<uInt>(payload.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != original_size) {
    throw Error(ErrorCode::CorruptPayload, "payload inflate failed (zlib status " + std::to_string(rc) + ")");
  }
  const auto digest = sha256_raw(out);
  if (!std::equal(digest.begin(), digest.end(), header.begin() + 16)) {
    throw Error(ErrorCode::CorruptPayload, "SHA-256 of unpacked bytes does not match container");
  }
  return RawBinary(std::move(out), raw.label(), Lineage::Original);
}

ExternalPacker::ExternalPacker(std::string command_template, std::string default_flag, std::string best_flag)
    : template_(std::move(command_template)),
      default_flag_(std::move(default_flag)),
      best_flag_(std::move(best_flag)) {}

RawBinary ExternalPacker::pack(const RawBinary& raw, PackLevel level) const {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const std::string stem = "brt-pack-" + raw.sha256().substr(0, 16) + "-" + std::string(to_string(level));
  const fs::path in = dir / (stem + ".in");
  const fs::path out = dir / (stem + ".out");
  write_file(in.string(), raw.view());
  std::error_code ec;
  fs::remove(out, ec);

  std::string cmd = template_;
  auto replace_all = [&](std::string_view key, const std::string& value) {
    for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
      cmd.replace(pos, key.size(), value);
    }
  };
  replace_all("{in}", in.string());
  replace_all("{out}", out.string());
  replace_all("{level}", level == PackLevel::Best ? best_flag_ : default_flag_);
  const int rc = std::system(cmd.c_str());
  if (rc != 0 || !fs::exists(out)) {
    fs::remove(in, ec);
    throw Error(ErrorCode::ExternalToolFailed, "'" + cmd + "' exited with status " + std::to_string(rc));
  }
  Bytes packed = read_file(out.string());
  fs::remove(in, ec);
  fs::remove(out, ec);
  return RawBinary(std::move(packed), raw.label(),
                   level == PackLevel::Best ? Lineage::PackedBest : Lineage::Packed);
}

}  // namespace brt
