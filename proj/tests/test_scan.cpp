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

#include <cstdlib>
#include <functional>
#include <set>

#include <json.hpp>

#include "brt/scan.hpp"

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

RawBinary sample(int i, Lineage lineage = Lineage::Original) {
  Bytes b(32 + static_cast<std::size_t>(i), static_cast<std::uint8_t>(i));
  return RawBinary(b, Label::Malicious, lineage);
}

ScanReport report(const std::string& digest, const std::vector<std::pair<std::string, bool>>& verdicts) {
  ScanReport r;
  r.sample_digest = digest;
  for (const auto& [e, d] : verdicts) r.verdicts.push_back({e, d, EngineKind::Uncertain, ""});
  r.engine_count = r.verdicts.size();
  return r;
}

class MockFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    script_.engines = {"AlphaAV", "BetaScan", "GammaAI"};
    script_.fallback = {{"AlphaAV", true}, {"BetaScan", false}, {"GammaAI", true}};
    server_ = std::make_unique<MockScanServer>(script_);
    server_->start();
    cfg_.endpoint = server_->endpoint();
    cfg_.min_age_seconds = 0.0;
    cfg_.timeout_seconds = 5.0;
  }
  void TearDown() override { server_->stop(); }

  MockScript script_;
  std::unique_ptr<MockScanServer> server_;
  ScanClientConfig cfg_;
};

TEST_F(MockFixture, SubmitReturnsDigestAndIsIdempotent) {
  ScanClient c(cfg_);
  const auto raw = sample(1);
  const auto id = c.submit(raw);
  EXPECT_EQ(id, raw.sha256());
  EXPECT_EQ(c.submit(raw), id);
  ScanClient fresh(cfg_);
  EXPECT_EQ(fresh.submit(raw), id);
}

TEST_F(MockFixture, EmptyFileRejected) {
  ScanClient c(cfg_);
  EXPECT_EQ(code_of([&] { c.submit(RawBinary(Bytes{})); }), ErrorCode::Rejected);
}

TEST_F(MockFixture, SizeLimitCheckedBeforeUpload) {
  cfg_.max_file_size = 16;
  ScanClient c(cfg_);
  EXPECT_EQ(code_of([&] { c.submit(sample(1)); }), ErrorCode::TooLarge);
}

TEST_F(MockFixture, FetchHonoursMinAgeAndReportsEngines) {
  cfg_.min_age_seconds = 60.0;
  ScanClient waiting(cfg_);
  const auto id = waiting.submit(sample(2));
  EXPECT_EQ(code_of([&] { waiting.fetch(id); }), ErrorCode::NotReady);

  cfg_.min_age_seconds = 0.0;
  ScanClient c(cfg_);
  const auto raw = sample(2, Lineage::Padded);
  const auto r = c.fetch(c.submit(raw));
  EXPECT_EQ(r.engine_count, 3u);
  EXPECT_EQ(r.sample_digest, raw.sha256());
  ASSERT_TRUE(r.lineage.has_value());
  EXPECT_EQ(*r.lineage, Lineage::Padded);
  EXPECT_EQ(r.verdicts[0].engine_id, "AlphaAV");
  EXPECT_TRUE(r.verdicts[0].detected);
  EXPECT_FALSE(r.verdicts[1].detected);
  EXPECT_FALSE(r.verdicts[0].scan_time.empty());
}

TEST_F(MockFixture, UnknownIdIs404) {
  ScanClient c(cfg_);
  EXPECT_EQ(code_of([&] { c.fetch(std::string(64, 'a')); }), ErrorCode::UnknownId);
}

TEST(MockServer, PendingServiceIsNotReady) {
  MockScript s;
  s.engines = {"A"};
  s.pending_seconds = 60.0;
  MockScanServer server(s);
  server.start();
  ScanClientConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.min_age_seconds = 0.0;
  ScanClient c(cfg);
  EXPECT_EQ(code_of([&] { c.fetch(c.submit(sample(3))); }), ErrorCode::NotReady);
}

TEST(MockServer, ApiKeyRequiredWhenConfigured) {
  MockScript s;
  s.engines = {"A"};
  s.api_key = "k3y";
  MockScanServer server(s);
  server.start();
  ScanClientConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.min_age_seconds = 0.0;
  ScanClient anon(cfg);
  EXPECT_EQ(code_of([&] { anon.submit(sample(4)); }), ErrorCode::Rejected);
  ::setenv("BRT_TEST_SCAN_KEY", "k3y", 1);
  cfg.api_key_env = "BRT_TEST_SCAN_KEY";
  ScanClient keyed(cfg);
  EXPECT_EQ(keyed.submit(sample(4)), sample(4).sha256());
}

TEST(ScanClientTest, UnreachableEndpoint) {
  ScanClientConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.timeout_seconds = 2.0;
  ScanClient c(cfg);
  EXPECT_EQ(code_of([&] { c.submit(sample(5)); }), ErrorCode::Unreachable);
}

TEST(ParseReport, MalformedEngineRecordIsNamed) {
  const std::string body =
      R"({"id":"ab","scan_date":"2026-01-01T00:00:00Z","results":{"Good":{"detected":true},"Broken":{"detected":"yes"}}})";
  try {
    parse_report(body);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("Broken"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { parse_report("not json"); }), ErrorCode::ParseError);
  const auto r = parse_report(R"({"id":"ab","results":{"X":{"detected":false}}})", {{"X", EngineKind::Ai}});
  EXPECT_EQ(r.verdicts[0].engine_kind, EngineKind::Ai);
}

TEST(Aggregate, RateArithmeticAndThreshold) {
  std::vector<ScanReport> reports;
  std::map<std::string, std::string> cats;
  for (int i = 0; i < 4; ++i) {
    reports.push_back(report("m" + std::to_string(i), {{"Solo", i < 3}}));
    cats["m" + std::to_string(i)] = "original";
  }
  auto agg = aggregate(reports, cats, 1, 1);
  ASSERT_EQ(agg.engines.size(), 1u);
  EXPECT_DOUBLE_EQ(*agg.engines[0].rate["original"], 75.0);

  for (int i = 4; i < 9; ++i) {
    reports.push_back(report("m" + std::to_string(i), {{"Solo", true}}));
    cats["m" + std::to_string(i)] = "original";
  }
  agg = aggregate(reports, cats, 1);
  EXPECT_EQ(agg.engines[0].samples["original"], 9u);
  EXPECT_FALSE(agg.engines[0].rate["original"].has_value());
  EXPECT_NE(render_engine_table(agg).find("---"), std::string::npos);

  reports.push_back(report("m9", {{"Solo", false}}));
  cats["m9"] = "original";
  agg = aggregate(reports, cats, 1);
  EXPECT_DOUBLE_EQ(*agg.engines[0].rate["original"], 80.0);
}

TEST(Aggregate, HandBuiltFixture) {
  // Five reports over two categories and three engines; counted by hand.
  const std::vector<ScanReport> reports = {
      report("a", {{"X", true}, {"Y", true}, {"Z", false}}),
      report("b", {{"X", true}, {"Y", false}, {"Z", false}}),
      report("c", {{"X", false}, {"Y", false}, {"Z", false}}),
      report("d", {{"X", true}, {"Y", true}, {"Z", true}}),
      report("e", {{"X", false}, {"Z", true}}),
  };
  const std::map<std::string, std::string> cats = {
      {"a", "original"}, {"b", "original"}, {"c", "original"}, {"d", "packed"}, {"e", "packed"}};
  const auto agg = aggregate(reports, cats, 99, 1);

  // Collect the multiset of per-engine rate rows, independent of the shuffle.
  std::multiset<std::vector<double>> rows;
  for (const auto& e : agg.engines) {
    std::vector<double> row;
    for (const std::string c : {"original", "packed"}) {
      auto it = e.rate.find(c);
      row.push_back(it != e.rate.end() && it->second ? *it->second : -1.0);
    }
    rows.insert(row);
  }
  const std::multiset<std::vector<double>> expected = {
      {100.0 * 2 / 3, 50.0},  // X
      {100.0 * 1 / 3, 100.0},  // Y: packed only from d
      {0.0, 100.0},            // Z
  };
  EXPECT_EQ(rows, expected);

  ASSERT_EQ(agg.distributions.size(), 2u);
  EXPECT_EQ(agg.distributions[0].category, "original");
  EXPECT_EQ(agg.distributions[0].histogram, (std::map<std::size_t, std::size_t>{{0, 1}, {1, 1}, {2, 1}}));
  EXPECT_EQ(agg.distributions[1].histogram, (std::map<std::size_t, std::size_t>{{1, 1}, {3, 1}}));
  for (const auto& d : agg.distributions) {
    std::size_t sum = 0;
    for (const auto& [k, v] : d.histogram) sum += v;
    EXPECT_EQ(sum, d.total);
  }
}

TEST(Aggregate, AnonymizationStableAndOpaque) {
  std::vector<ScanReport> reports;
  std::map<std::string, std::string> cats;
  for (int i = 0; i < 12; ++i) {
    const std::string d = "s" + std::to_string(i);
    reports.push_back(report(d, {{"VendorOne", i % 2 == 0}, {"VendorTwo", true}, {"VendorThree", i % 3 == 0}}));
    cats[d] = "stripped";
  }
  const auto a = aggregation_json(aggregate(reports, cats, 5));
  const auto b = aggregation_json(aggregate(reports, cats, 5));
  EXPECT_EQ(a, b);
  const auto table = render_engine_table(aggregate(reports, cats, 5));
  for (const std::string name : {"VendorOne", "VendorTwo", "VendorThree"}) {
    EXPECT_EQ(a.find(name), std::string::npos);
    EXPECT_EQ(table.find(name), std::string::npos);
  }
  EXPECT_NE(a.find("E --- 3"), std::string::npos);
}

TEST(Aggregate, UnlabeledDigest) {
  EXPECT_EQ(code_of([] { aggregate({report("zz", {{"A", true}})}, {}, 1); }), ErrorCode::UnlabeledDigest);
}

TEST(MockServer, RoundTripReproducesScript) {
  MockScript s;
  s.engines = {"A", "B", "C", "D"};
  std::vector<RawBinary> samples;
  for (int i = 0; i < 24; ++i) {
    const Lineage l = i % 2 ? Lineage::Packed : Lineage::Original;
    samples.push_back(sample(10 + i, l));
    s.lineages[samples.back().sha256()] = l;
  }
  s.by_lineage[Lineage::Original] = {{"A", true}, {"B", true}, {"C", false}, {"D", true}};
  s.by_lineage[Lineage::Packed] = {{"A", false}, {"B", true}, {"C", false}, {"D", false}};
  s.verdicts[samples[0].sha256()] = {{"C", true}};

  MockScanServer server(s);
  server.start();
  ScanClientConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.min_age_seconds = 0.0;
  cfg.max_in_flight = 3;
  ScanClient c(cfg);
  const auto ids = c.submit_all(samples);
  ASSERT_EQ(ids.size(), samples.size());
  std::vector<ScanReport> reports;
  std::map<std::string, std::string> cats;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(ids[i], samples[i].sha256());
    auto r = c.fetch(ids[i]);
    std::map<std::string, bool> got;
    for (const auto& v : r.verdicts) got[v.engine_id] = v.detected;
    EXPECT_EQ(got, s.results_for(samples[i].sha256()));
    cats[r.sample_digest] = std::string(to_string(*r.lineage));
    reports.push_back(std::move(r));
  }
  const auto agg = aggregate(reports, cats, 3);
  for (const auto& d : agg.distributions) EXPECT_EQ(d.total, 12u);
}

TEST(MockScriptTest, FromJson) {
  const auto s = MockScript::from_json(
      R"({"engines":["A","B"],"fallback":{"A":true},"by_lineage":{"padded":{"B":true}},"lineages":{"ff":"padded"},"pending_seconds":2})");
  EXPECT_EQ(s.results_for("00"), (std::map<std::string, bool>{{"A", true}, {"B", false}}));
  EXPECT_EQ(s.results_for("ff"), (std::map<std::string, bool>{{"A", false}, {"B", true}}));
  EXPECT_EQ(s.pending_seconds, 2.0);
  EXPECT_EQ(code_of([] { MockScript::from_json("{"); }), ErrorCode::ParseError);
}

}  // namespace
}  // namespace brt
