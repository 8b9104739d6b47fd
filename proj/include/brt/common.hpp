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
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace brt {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Every failure surfaced by the toolkit carries one of these codes so that
/// callers (and tests) can branch on the condition rather than the message.
enum class ErrorCode {
  NotElf,
  TruncatedFile,
  MalformedTable,
  NoLoadSegments,
  NotPackedBySurrogate,
  CorruptPayload,
  ExternalToolFailed,
  SchemaError,
  DanglingEdge,
  DuplicateNodeId,
  EmptyFile,
  EmptyCorpus,
  DimensionMismatch,
  MissingContext,
  SingleClassTraining,
  ShapeMismatch,
  NotDifferentiable,
  DomainViolation,
  OddImageHeight,
  InvalidArgument,
  Unreachable,
  Rejected,
  TooLarge,
  NotReady,
  UnknownId,
  ParseError,
  UnlabeledDigest,
  ToolchainMissing,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Hex-encoded SHA-256.
std::string sha256_hex(ByteView data);
std::array<std::uint8_t, 32> sha256_raw(ByteView data);

/// Shannon entropy in bits per byte; 0 for an empty range.
double shannon_entropy(ByteView data);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, ByteView data);
void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

// Little/big-endian field access used by the ELF reader/writer and the
// container formats.
template <typename T>
T load_int(ByteView data, std::size_t offset, bool little_endian) {
  if (offset + sizeof(T) > data.size()) {
    throw Error(ErrorCode::TruncatedFile,
                "read of " + std::to_string(sizeof(T)) + " bytes at offset " +
                    std::to_string(offset) + " past end " + std::to_string(data.size()));
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    std::size_t idx = little_endian ? sizeof(T) - 1 - i : i;
    value = static_cast<T>((value << 8) | static_cast<T>(data[offset + idx]));
  }
  return value;
}

template <typename T>
void store_int(Bytes& data, std::size_t offset, T value, bool little_endian) {
  if (offset + sizeof(T) > data.size()) data.resize(offset + sizeof(T), 0);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    std::size_t idx = little_endian ? i : sizeof(T) - 1 - i;
    data[offset + idx] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
}

template <typename T>
void append_int(Bytes& data, T value, bool little_endian = true) {
  store_int<T>(data, data.size(), value, little_endian);
}

}  // namespace brt
