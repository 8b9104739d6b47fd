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

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "brt/elf.hpp"

namespace brt {

enum class EngineKind { Ai, Uncertain };

std::string_view to_string(EngineKind kind);
EngineKind parse_engine_kind(std::string_view text);

struct EngineVerdict {
  std::string engine_id;
  bool detected = false;
  EngineKind engine_kind = EngineKind::Uncertain;
  std::string scan_time;  // ISO 8601, as reported
};

struct ScanReport {
  std::string sample_digest;
  std::optional<Lineage> lineage;
  std::vector<EngineVerdict> verdicts;  // sorted by engine id
  std::size_t engine_count = 0;
};

/// Parses GET /reports/{id}. `ai_engines` marks engines as AI; everything
/// else is uncertain. Throws ParseError naming the offending engine record.
ScanReport parse_report(const std::string& body, const std::map<std::string, EngineKind>& ai_engines = {});

struct ScanClientConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080
  std::string api_key_env;  // name of the variable holding the key, empty for none
  double min_age_seconds = 10.0;
  std::size_t max_file_size = 650u * 1024 * 1024;
  std::size_t max_in_flight = 4;
  double timeout_seconds = 30.0;
  std::map<std::string, EngineKind> ai_engines;
};

/// Client for the scan wire protocol:
///   POST /files (multipart "file")  -> {"id": "<sha256>"}
///   GET  /reports/{id}              -> {"id", "scan_date", "results": {engine: {"detected": bool}}}
/// with 404 for unknown ids and 425 while pending.
class ScanClient {
 public:
  explicit ScanClient(ScanClientConfig config);

  /// Throws Unreachable, Rejected or TooLarge. Re-submitting a digest
  /// returns the id from the first submission.
  std::string submit(const RawBinary& raw);
  /// Throws NotReady (younger than min_age or pending at the service),
  /// UnknownId or ParseError.
  ScanReport fetch(const std::string& id);

  /// Submits every sample with at most max_in_flight requests at once.
  std::vector<std::string> submit_all(const std::vector<RawBinary>& samples);

  const ScanClientConfig& config() const noexcept { return config_; }

 private:
  ScanClientConfig config_;
  std::map<std::string, std::string> ids_;  // digest -> id
  std::map<std::string, std::chrono::steady_clock::time_point> submitted_;
  std::map<std::string, Lineage> lineages_;  // id -> lineage at submission
};

/// Scripted verdict table served by the bundled mock.
struct MockScript {
  std::vector<std::string> engines;
  /// digest -> engine -> detected; digests not listed use `by_lineage`
  /// through `lineages`, then `fallback`.
  std::map<std::string, std::map<std::string, bool>> verdicts;
  std::map<std::string, Lineage> lineages;
  std::map<Lineage, std::map<std::string, bool>> by_lineage;
  std::map<std::string, bool> fallback;
  double pending_seconds = 0.0;
  std::string api_key;  // when set, requests must carry it in x-apikey

  static MockScript from_json(const std::string& text);
  std::map<std::string, bool> results_for(const std::string& digest) const;
};

/// In-process HTTP server speaking the scan protocol on 127.0.0.1.
class MockScanServer {
 public:
  explicit MockScanServer(MockScript script);
  ~MockScanServer();
  MockScanServer(const MockScanServer&) = delete;
  MockScanServer& operator=(const MockScanServer&) = delete;

  /// Binds to `port` (0 picks a free one) and serves on a background thread.
  int start(int port = 0);
  void stop();
  std::string endpoint() const;
  /// Blocks in the calling thread until stop() from another thread.
  void serve_forever(const std::string& host, int port);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline constexpr std::size_t kDefaultMinSamples = 10;

struct EngineAggregate {
  std::string anonymized_id;  // "E --- i"
  EngineKind engine_kind = EngineKind::Uncertain;
  std::map<std::string, std::optional<double>> rate;  // category -> percent, null below min_samples
  std::map<std::string, std::size_t> samples;
  std::map<std::string, std::size_t> detections;
};

struct DetectionDistribution {
  std::string category;
  std::map<std::size_t, std::size_t> histogram;  // engines flagging a sample -> samples
  std::size_t total = 0;
};

struct Aggregation {
  std::vector<EngineAggregate> engines;  // ordered by anonymized index
  std::vector<DetectionDistribution> distributions;
};

/// Per-engine detection rates by category. Engine names are replaced by
/// "E --- i" following a seeded shuffle of the sorted names. Throws
/// UnlabeledDigest when a report has no category.
Aggregation aggregate(const std::vector<ScanReport>& reports, const std::map<std::string, std::string>& categories,
                      std::uint64_t seed, std::size_t min_samples = kDefaultMinSamples);

/// Markdown table: one row per engine, one column per category, "---" for
/// null cells.
std::string render_engine_table(const Aggregation& agg);
std::string aggregation_json(const Aggregation& agg);

}  // namespace brt
