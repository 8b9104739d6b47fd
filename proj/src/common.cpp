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

#include "brt/common.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace brt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotElf: return "NotElf";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MalformedTable: return "MalformedTable";
    case ErrorCode::NoLoadSegments: return "NoLoadSegments";
    case ErrorCode::NotPackedBySurrogate: return "NotPackedBySurrogate";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::ExternalToolFailed: return "ExternalToolFailed";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::DuplicateNodeId: return "DuplicateNodeId";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotDifferentiable: return "NotDifferentiable";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::OddImageHeight: return "OddImageHeight";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::Rejected: return "Rejected";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnlabeledDigest: return "UnlabeledDigest";
    case ErrorCode::ToolchainMissing: return "ToolchainMissing";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::array<std::uint8_t, 32> sha256_raw(ByteView data) {
  std::array<std::uint8_t, 32> out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

std::string sha256_hex(ByteView data) {
  static constexpr char kHex[] = "0123456789abcdef";
  auto raw = sha256_raw(data);
  std::string hex;
  hex.reserve(64);
  for (auto b : raw) {
    hex.push_back(kHex[b >> 4]);
    hex.push_back(kHex[b & 0xf]);
  }
  return hex;
}

double shannon_entropy(ByteView data) {
  if (data.empty()) return 0.0;
  std::array<std::size_t, 256> counts{};
  for (auto b : data) ++counts[b];
  const double n = static_cast<double>(data.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace brt
