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

#include "brt/scan.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <future>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "brt/random.hpp"

namespace brt {

using nlohmann::json;

namespace {

std::string utc_now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::unique_ptr<httplib::Client> make_client(const ScanClientConfig& cfg) {
  auto cli = std::make_unique<httplib::Client>(cfg.endpoint);
  const auto secs = static_cast<time_t>(cfg.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli->set_connection_timeout(secs, usecs);
  cli->set_read_timeout(secs, usecs);
  cli->set_write_timeout(secs, usecs);
  return cli;
}

httplib::Headers auth_headers(const ScanClientConfig& cfg) {
  httplib::Headers h;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) h.emplace("x-apikey", key);
  }
  return h;
}

std::string post_file(const ScanClientConfig& cfg, const RawBinary& raw) {
  auto cli = make_client(cfg);
  httplib::MultipartFormDataItems items{
      {"file", std::string(raw.bytes().begin(), raw.bytes().end()), raw.sha256(), "application/octet-stream"}};
  auto res = cli->Post("/files", auth_headers(cfg), items);
  if (!res) {
    throw Error(ErrorCode::Unreachable, cfg.endpoint + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::Rejected, "status " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    return json::parse(res->body).at("id").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("submission response: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(EngineKind kind) { return kind == EngineKind::Ai ? "ai" : "uncertain"; }

EngineKind parse_engine_kind(std::string_view text) {
  if (text == "ai") return EngineKind::Ai;
  if (text == "uncertain") return EngineKind::Uncertain;
  throw Error(ErrorCode::InvalidArgument, "unknown engine kind '" + std::string(text) + "'");
}

ScanReport parse_report(const std::string& body, const std::map<std::string, EngineKind>& ai_engines) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report is not JSON: ") + e.what());
  }
  ScanReport r;
  if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string()) {
    throw Error(ErrorCode::ParseError, "report has no string id");
  }
  r.sample_digest = doc["id"].get<std::string>();
  const std::string when = doc.contains("scan_date") && doc["scan_date"].is_string() ? doc["scan_date"].get<std::string>() : "";
  if (!doc.contains("results") || !doc["results"].is_object()) {
    throw Error(ErrorCode::ParseError, "report has no results object");
  }
  for (const auto& [engine, entry] : doc["results"].items()) {
    if (engine.empty()) throw Error(ErrorCode::ParseError, "engine record with an empty name");
    if (!entry.is_object() || !entry.contains("detected") || !entry["detected"].is_boolean()) {
      throw Error(ErrorCode::ParseError, "engine record '" + engine + "' lacks a boolean 'detected'");
    }
    EngineVerdict v;
    v.engine_id = engine;
    v.detected = entry["detected"].get<bool>();
    auto it = ai_engines.find(engine);
    v.engine_kind = it == ai_engines.end() ? EngineKind::Uncertain : it->second;
    v.scan_time = when;
    r.verdicts.push_back(std::move(v));
  }
  std::sort(r.verdicts.begin(), r.verdicts.end(),
            [](const EngineVerdict& a, const EngineVerdict& b) { return a.engine_id < b.engine_id; });
  r.engine_count = r.verdicts.size();
  return r;
}

ScanClient::ScanClient(ScanClientConfig config) : config_(std::move(config)) {
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
}

std::string ScanClient::submit(const RawBinary& raw) {
  if (auto it = ids_.find(raw.sha256()); it != ids_.end()) return it->second;
  if (raw.size() > config_.max_file_size) {
    throw Error(ErrorCode::TooLarge, std::to_string(raw.size()) + " bytes exceeds the " +
                                         std::to_string(config_.max_file_size) + "-byte limit");
  }
  std::string id = post_file(config_, raw);
  ids_[raw.sha256()] = id;
  submitted_.emplace(id, std::chrono::steady_clock::now());
  lineages_.emplace(id, raw.lineage());
  return id;
}

std::vector<std::string> ScanClient::submit_all(const std::vector<RawBinary>& samples) {
  std::vector<std::string> ids(samples.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (auto it = ids_.find(samples[i].sha256()); it != ids_.end()) {
      ids[i] = it->second;
    } else if (samples[i].size() > config_.max_file_size) {
      throw Error(ErrorCode::TooLarge, samples[i].sha256() + " exceeds the size limit");
    } else {
      pending.push_back(i);
    }
  }
  for (std::size_t start = 0; start < pending.size(); start += config_.max_in_flight) {
    const std::size_t end = std::min(pending.size(), start + config_.max_in_flight);
    std::vector<std::future<std::string>> batch;
    for (std::size_t k = start; k < end; ++k) {
      batch.push_back(std::async(std::launch::async, post_file, std::cref(config_), std::cref(samples[pending[k]])));
    }
    for (std::size_t k = start; k < end; ++k) {
      const auto& raw = samples[pending[k]];
      std::string id = batch[k - start].get();
      if (ids_.emplace(raw.sha256(), id).second) {
        submitted_.emplace(id, std::chrono::steady_clock::now());
        lineages_.emplace(id, raw.lineage());
      }
      ids[pending[k]] = ids_[raw.sha256()];
    }
  }
  return ids;
}

ScanReport ScanClient::fetch(const std::string& id) {
  if (auto it = submitted_.find(id); it != submitted_.end()) {
    const std::chrono::duration<double> age = std::chrono::steady_clock::now() - it->second;
    if (age.count() < config_.min_age_seconds) {
      throw Error(ErrorCode::NotReady, id + " was submitted " + std::to_string(age.count()) + " s ago");
    }
  }
  auto cli = make_client(config_);
  auto res = cli->Get("/reports/" + id, auth_headers(config_));
  if (!res) throw Error(ErrorCode::Unreachable, config_.endpoint + ": " + httplib::to_string(res.error()));
  if (res->status == 404) throw Error(ErrorCode::UnknownId, id);
  if (res->status == 425) throw Error(ErrorCode::NotReady, id + " is still pending");
  if (res->status != 200) {
    throw Error(ErrorCode::Rejected, "status " + std::to_string(res->status) + ": " + res->body);
  }
  ScanReport r = parse_report(res->body, config_.ai_engines);
  for (const auto& [digest, known] : ids_) {
    if (known == id) r.sample_digest = digest;
  }
  if (auto it = lineages_.find(id); it != lineages_.end()) r.lineage = it->second;
  return r;
}

MockScript MockScript::from_json(const std::string& text) {
  MockScript s;
  try {
    const json j = json::parse(text);
    s.engines = j.value("engines", std::vector<std::string>{});
    if (j.contains("verdicts")) s.verdicts = j["verdicts"].get<std::map<std::string, std::map<std::string, bool>>>();
    if (j.contains("lineages")) {
      for (const auto& [d, l] : j["lineages"].items()) s.lineages[d] = parse_lineage(l.get<std::string>());
    }
    if (j.contains("by_lineage")) {
      for (const auto& [l, table] : j["by_lineage"].items()) {
        s.by_lineage[parse_lineage(l)] = table.get<std::map<std::string, bool>>();
      }
    }
    if (j.contains("fallback")) s.fallback = j["fallback"].get<std::map<std::string, bool>>();
    s.pending_seconds = j.value("pending_seconds", 0.0);
    s.api_key = j.value("api_key", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("mock script: ") + e.what());
  }
  return s;
}

std::map<std::string, bool> MockScript::results_for(const std::string& digest) const {
  std::map<std::string, bool> out;
  for (const auto& e : engines) out[e] = false;
  const std::map<std::string, bool>* table = &fallback;
  if (auto it = verdicts.find(digest); it != verdicts.end()) {
    table = &it->second;
  } else if (auto l = lineages.find(digest); l != lineages.end()) {
    if (auto b = by_lineage.find(l->second); b != by_lineage.end()) table = &b->second;
  }
  for (const auto& [engine, hit] : *table) out[engine] = hit;
  return out;
}

struct MockScanServer::Impl {
  MockScript script;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::mutex mu;
  std::map<std::string, std::chrono::steady_clock::time_point> seen;

  bool authorized(const httplib::Request& req, httplib::Response& res) const {
    if (script.api_key.empty() || req.get_header_value("x-apikey") == script.api_key) return true;
    res.status = 401;
    res.set_content(R"({"error":"bad api key"})", "application/json");
    return false;
  }

  void routes() {
    server.Post("/files", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      if (!req.has_file("file")) {
        res.status = 400;
        res.set_content(R"({"error":"missing file field"})", "application/json");
        return;
      }
      const auto file = req.get_file_value("file");
      if (file.content.empty()) {
        res.status = 400;
        res.set_content(R"({"error":"empty file"})", "application/json");
        return;
      }
      const std::string id = sha256_hex(ByteView(reinterpret_cast<const std::uint8_t*>(file.content.data()), file.content.size()));
      {
        std::lock_guard lock(mu);
        seen.emplace(id, std::chrono::steady_clock::now());
      }
      res.set_content(json{{"id", id}}.dump(), "application/json");
    });
    server.Get(R"(/reports/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      const std::string id = req.matches[1];
      std::chrono::steady_clock::time_point when;
      {
        std::lock_guard lock(mu);
        auto it = seen.find(id);
        if (it == seen.end()) {
          res.status = 404;
          res.set_content(R"({"error":"unknown id"})", "application/json");
          return;
        }
        when = it->second;
      }
      const std::chrono::duration<double> age = std::chrono::steady_clock::now() - when;
      if (age.count() < script.pending_seconds) {
        res.status = 425;
        res.set_content(R"({"error":"pending"})", "application/json");
        return;
      }
      json results = json::object();
      for (const auto& [engine, hit] : script.results_for(id)) results[engine] = {{"detected", hit}};
      res.set_content(json{{"id", id}, {"scan_date", utc_now_iso()}, {"results", results}}.dump(), "application/json");
    });
  }
};

MockScanServer::MockScanServer(MockScript script) : impl_(std::make_unique<Impl>()) {
  impl_->script = std::move(script);
  impl_->routes();
}

MockScanServer::~MockScanServer() { stop(); }

int MockScanServer::start(int port) {
  auto& s = impl_->server;
  if (port == 0) {
    impl_->port = s.bind_to_any_port("127.0.0.1");
  } else {
    impl_->port = s.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (impl_->port < 0) throw Error(ErrorCode::IoError, "mock server could not bind");
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return impl_->port;
}

void MockScanServer::serve_forever(const std::string& host, int port) {
  impl_->port = port;
  if (!impl_->server.listen(host, port)) throw Error(ErrorCode::IoError, "mock server could not listen");
}

void MockScanServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockScanServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

Aggregation aggregate(const std::vector<ScanReport>& reports, const std::map<std::string, std::string>& categories,
                      std::uint64_t seed, std::size_t min_samples) {
  std::vector<std::string> names;
  std::map<std::string, EngineKind> kinds;
  std::map<std::string, DetectionDistribution> dist;
  for (const auto& r : reports) {
    auto c = categories.find(r.sample_digest);
    if (c == categories.end()) throw Error(ErrorCode::UnlabeledDigest, r.sample_digest);
    auto& d = dist[c->second];
    d.category = c->second;
    std::size_t hits = 0;
    for (const auto& v : r.verdicts) {
      names.push_back(v.engine_id);
      kinds[v.engine_id] = v.engine_kind;
      hits += v.detected ? 1 : 0;
    }
    ++d.histogram[hits];
    ++d.total;
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<std::string> order = names;
  Rng rng(seed);
  rng.shuffle(order);

  std::map<std::string, std::size_t> slot;
  Aggregation agg;
  for (std::size_t i = 0; i < order.size(); ++i) {
    slot[order[i]] = i;
    EngineAggregate e;
    e.anonymized_id = "E --- " + std::to_string(i + 1);
    e.engine_kind = kinds[order[i]];
    for (const auto& [cat, d] : dist) {
      e.samples[cat] = 0;
      e.detections[cat] = 0;
    }
    agg.engines.push_back(std::move(e));
  }
  for (const auto& r : reports) {
    const std::string& cat = categories.at(r.sample_digest);
    for (const auto& v : r.verdicts) {
      auto& e = agg.engines[slot[v.engine_id]];
      ++e.samples[cat];
      if (v.detected) ++e.detections[cat];
    }
  }
  for (auto& e : agg.engines) {
    for (const auto& [cat, n] : e.samples) {
      if (n >= min_samples && n > 0) {
        e.rate[cat] = 100.0 * static_cast<double>(e.detections[cat]) / static_cast<double>(n);
      } else {
        e.rate[cat] = std::nullopt;
      }
    }
  }
  for (auto& [cat, d] : dist) agg.distributions.push_back(std::move(d));
  return agg;
}

std::string render_engine_table(const Aggregation& agg) {
  std::vector<std::string> cats;
  for (const auto& d : agg.distributions) cats.push_back(d.category);
  std::string out = "| Engine | AI |";
  for (const auto& c : cats) out += " " + c + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < cats.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& e : agg.engines) {
    out += "| " + e.anonymized_id + " | " + (e.engine_kind == EngineKind::Ai ? "yes" : "") + " |";
    for (const auto& c : cats) {
      auto it = e.rate.find(c);
      if (it == e.rate.end() || !it->second) {
        out += " --- |";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.2f |", *it->second);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

std::string aggregation_json(const Aggregation& agg) {
  json j;
  j["engines"] = json::array();
  for (const auto& e : agg.engines) {
    json rates = json::object();
    for (const auto& [c, r] : e.rate) rates[c] = r ? json(*r) : json(nullptr);
    j["engines"].push_back({{"id", e.anonymized_id},
                            {"kind", std::string(to_string(e.engine_kind))},
                            {"rate", rates},
                            {"samples", e.samples},
                            {"detections", e.detections}});
  }
  j["distributions"] = json::array();
  for (const auto& d : agg.distributions) {
    json h = json::object();
    for (const auto& [k, v] : d.histogram) h[std::to_string(k)] = v;
    j["distributions"].push_back({{"category", d.category}, {"histogram", h}, {"total", d.total}});
  }
  return j.dump(2);
}

}  // namespace brt
