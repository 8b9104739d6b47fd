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

#include <optional>
#include <string>

#include "brt/elf.hpp"

namespace brt {

/// Removes .symtab, .strtab and .debug* sections and rewrites the section
/// header table (names rebuilt, links renumbered). Everything the loader
/// reads keeps its bytes and offsets. Idempotent.
RawBinary strip_binary(const RawBinary& raw);

/// Appends `tail` after the last byte of the file. Throws InvalidArgument
/// for an empty tail.
RawBinary pad_binary(const RawBinary& raw, ByteView tail);

enum class PackLevel { Default, Best };

std::string_view to_string(PackLevel level);

// Surrogate-pack container header, placed directly after the program
// header table of the packed ELF:
//   0..3 "SPK1", 4..7 version u32 LE, 8..15 original size u64 LE,
//   16..47 SHA-256 of the original, 48..63 reserved (zero).
inline constexpr std::size_t kPackHeaderSize = 64;
inline constexpr std::uint32_t kPackVersion = 1;

/// Compresses the whole input with DEFLATE (zlib level 6 for Default, 9 for
/// Best) into a fresh single-LOAD ELF with the same class, byte order and
/// machine. The output has no section header table; its entry point is the
/// container header. Throws NotElf / NoLoadSegments.
RawBinary pack_binary(const RawBinary& raw, PackLevel level);

/// Inverse of pack_binary. Throws NotPackedBySurrogate when the container
/// marker is absent and CorruptPayload on any decode or checksum failure.
RawBinary unpack_binary(const RawBinary& raw);

/// Offset of the container header in a surrogate-packed file, if present.
std::optional<std::size_t> find_pack_container(ByteView bytes);

/// The compressed stream of a surrogate-packed file (header excluded).
ByteView packed_payload(ByteView bytes);

/// Runs an operator-supplied packer, e.g. "upx -q {level} -o {out} {in}".
/// `{level}` expands to the flag configured for the level.
class ExternalPacker {
 public:
  explicit ExternalPacker(std::string command_template, std::string default_flag = "",
                          std::string best_flag = "--best");

  RawBinary pack(const RawBinary& raw, PackLevel level) const;

 private:
  std::string template_;
  std::string default_flag_;
  std::string best_flag_;
};

}  // namespace brt
