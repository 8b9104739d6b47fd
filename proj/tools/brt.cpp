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

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "brt/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<brt::ModelSlot> parse_models(const std::string& text) {
  std::vector<brt::ModelSlot> out;
  for (const auto& m : split_list(text)) {
    if (m == "lr") {
      out.push_back(brt::ModelSlot::Lr);
    } else if (m == "rf") {
      out.push_back(brt::ModelSlot::Rf);
    } else if (m == "nn" || m == "mlp" || m == "cnn") {
      if (std::find(out.begin(), out.end(), brt::ModelSlot::Nn) == out.end()) out.push_back(brt::ModelSlot::Nn);
    } else {
      throw brt::Error(brt::ErrorCode::InvalidArgument, "unknown model '" + m + "'");
    }
  }
  return out;
}

std::vector<brt::RepresentationKind> parse_kinds(const std::string& text) {
  std::vector<brt::RepresentationKind> out;
  for (const auto& k : split_list(text)) {
    if (k == "all") return {brt::kAllKinds.begin(), brt::kAllKinds.end()};
    out.push_back(brt::parse_kind(k));
  }
  return out;
}

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string corpus;
};

brt::ExperimentConfig make_config(const Globals& g) {
  brt::ExperimentConfig c = g.config.empty() ? brt::ExperimentConfig{} : brt::load_config(g.config);
  if (g.seed_set) c.seed = g.seed;
  if (!g.out.empty()) c.output = g.out;
  if (!g.corpus.empty()) c.corpus_dir = g.corpus;
  c.validate();
  return c;
}

brt::Study make_study(const brt::ExperimentConfig& c) {
  brt::Study s(c, brt::Corpus::load(c.corpus_path()));
  s.set_models_dir(fs::path(c.output) / "models");
  return s;
}

fs::path reports_dir(const brt::ExperimentConfig& c) { return fs::path(c.output) / "reports"; }

void write_records(const brt::ExperimentConfig& c, const std::vector<std::string>& records) {
  std::string text;
  for (const auto& r : records) text += r + "\n";
  fs::create_directories(reports_dir(c));
  brt::write_text((reports_dir(c) / "attacks.jsonl").string(), text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robustness study toolkit for ELF malware classifiers"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "TOML experiment config");
  app.add_option("--seed", g.seed, "Seed override")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--out", g.out, "Run directory");
  app.add_option("--corpus", g.corpus, "Corpus directory (default <out>/corpus)");

  auto* corpus = app.add_subcommand("corpus", "Create or import a corpus");
  corpus->require_subcommand(1);
  auto* gen = corpus->add_subcommand("gen", "Generate the synthetic ELF corpus");
  std::size_t n_benign = 0, n_malicious = 0;
  std::string compiler;
  bool no_fallback = false;
  gen->add_option("--benign", n_benign, "Benign sample count");
  gen->add_option("--malicious", n_malicious, "Malicious sample count");
  gen->add_option("--compiler", compiler, "C compiler");
  gen->add_flag("--no-fallback", no_fallback, "Fail when no compiler is found");
  auto* ingest = corpus->add_subcommand("ingest", "Import a directory of binaries");
  std::string ingest_dir, ingest_label;
  ingest->add_option("dir", ingest_dir, "Directory to import")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--label", ingest_label, "benign or malicious")->required();

  auto* manipulate = app.add_subcommand("manipulate", "Derive packed, stripped and padded variants");
  std::string ops;
  manipulate->add_option("--ops", ops, "Comma list of pack, pack-best, strip, pad");

  auto* extract = app.add_subcommand("extract", "Write feature CSVs");
  std::string kinds;
  extract->add_option("--kinds", kinds, "Comma list of representations or 'all'");

  auto* train = app.add_subcommand("train", "Train models and write the baseline table");
  std::string models;
  train->add_option("--models", models, "Comma list of lr, rf, nn");
  train->add_option("--kinds", kinds, "Comma list of representations or 'all'");

  auto* attack = app.add_subcommand("attack", "Run one attack stage");
  std::string attack_name;
  attack->add_option("--attack", attack_name, "noise, graph, string or pad")
      ->required()
      ->check(CLI::IsMember({"noise", "graph", "string", "pad"}));
  std::string noise_mode;
  attack->add_option("--noise-mode", noise_mode, "gaussian or uniform-shift");

  auto* scan = app.add_subcommand("scan", "Submit every corpus sample to a scan endpoint");
  std::string endpoint, mock_script;
  scan->add_option("--endpoint", endpoint, "Scan service base URL");
  scan->add_option("--mock-script", mock_script, "Serve verdicts from a script with the bundled mock");

  auto* report = app.add_subcommand("report", "Render a stored report table");
  std::string table, format = "md";
  report->add_option("--table", table, "baseline, whitebox, manipulation, noise, engines or distributions")
      ->required()
      ->check(CLI::IsMember({"baseline", "whitebox", "manipulation", "noise", "engines", "distributions"}));
  report->add_option("--format", format, "md, csv or json")->check(CLI::IsMember({"md", "csv", "json"}));

  auto* run_all = app.add_subcommand("run-all", "Run every stage end to end");

  auto* mock = app.add_subcommand("mock-server", "Serve the scan protocol from a verdict script");
  std::string mock_host = "127.0.0.1";
  int mock_port = 8080;
  mock->add_option("--script", mock_script, "Verdict script (JSON)")->required()->check(CLI::ExistingFile);
  mock->add_option("--host", mock_host, "Bind address");
  mock->add_option("--port", mock_port, "Port");

  CLI11_PARSE(app, argc, argv);

  try {
    brt::ExperimentConfig c = make_config(g);
    if (gen->parsed()) {
      if (n_benign) c.n_benign = n_benign;
      if (n_malicious) c.n_malicious = n_malicious;
      if (!compiler.empty()) c.compiler = compiler;
      brt::GeneratorOptions opts{c.compiler};
      opts.allow_fallback = !no_fallback;
      const auto corp = brt::generate_synthetic_corpus(c.n_benign, c.n_malicious, c.seed, c.corpus_path(), opts);
      std::cout << corp.entries().size() << " samples in " << c.corpus_path() << "\n";
    } else if (ingest->parsed()) {
      const auto corp = brt::ingest_directory(ingest_dir, brt::parse_label(ingest_label), c.corpus_path());
      std::cout << corp.entries().size() << " samples in " << c.corpus_path() << "\n";
    } else if (manipulate->parsed()) {
      if (!ops.empty()) {
        c.ops.clear();
        for (const auto& op : split_list(ops)) c.ops.push_back(brt::parse_manipulation(op));
      }
      auto corp = brt::Corpus::load(c.corpus_path());
      brt::manipulate_corpus(corp, c.ops, c.seed);
      std::cout << corp.entries().size() << " samples in " << c.corpus_path() << "\n";
    } else if (extract->parsed()) {
      if (!kinds.empty()) c.representations = parse_kinds(kinds);
      brt::Study s = make_study(c);
      const fs::path dir = fs::path(c.output) / "features";
      fs::create_directories(dir);
      for (auto kind : c.representations) {
        std::vector<brt::FeatureVector> rows;
        std::vector<brt::Label> labels;
        for (const auto& e : s.corpus().entries()) {
          rows.push_back(s.features(kind, e));
          labels.push_back(e.label);
        }
        brt::write_text((dir / (std::string(brt::to_string(kind)) + ".csv")).string(), brt::to_csv(rows, labels));
      }
      std::cout << "features in " << dir.string() << "\n";
    } else if (train->parsed()) {
      if (!models.empty()) c.models = parse_models(models);
      if (!kinds.empty()) c.representations = parse_kinds(kinds);
      brt::Study s = make_study(c);
      const auto t = brt::run_baseline(s);
      t.write(reports_dir(c));
      std::cout << t.to_markdown();
    } else if (attack->parsed()) {
      if (!noise_mode.empty()) c.noise_mode = brt::parse_noise_mode(noise_mode);
      if (attack_name == "graph") {
        c.representations = {brt::RepresentationKind::CfgAdjacency, brt::RepresentationKind::CfgAlgorithmic};
      } else if (attack_name == "string") {
        c.representations = {brt::RepresentationKind::Strings};
      } else if (attack_name == "pad") {
        c.representations = {brt::RepresentationKind::Image};
      }
      brt::Study s = make_study(c);
      if (attack_name == "noise") {
        const auto t = brt::run_noise(s);
        t.write(reports_dir(c));
        std::cout << t.to_markdown();
      } else {
        auto out = brt::run_whitebox(s);
        out.table.kind = "whitebox_" + attack_name;
        out.table.write(reports_dir(c));
        write_records(c, out.records);
        std::cout << out.table.to_markdown();
      }
    } else if (scan->parsed()) {
      if (!endpoint.empty()) c.scan.endpoint = endpoint;
      if (!mock_script.empty()) c.mock_script = mock_script;
      brt::Study s = make_study(c);
      const auto out = brt::run_engines(s);
      out.engines.write(reports_dir(c));
      out.distributions.write(reports_dir(c));
      std::cout << out.engines.to_markdown();
    } else if (report->parsed()) {
      std::string kind = table;
      if (kind == "noise") kind = "noise_curves";
      if (kind == "engines") kind = "engine_table";
      const auto path = reports_dir(c) / (kind + ".json");
      const auto t = brt::ReportTable::from_json(nlohmann::json::parse(brt::read_text(path.string())));
      if (format == "csv") {
        std::cout << t.to_csv();
      } else if (format == "json") {
        std::cout << t.to_json().dump(2) << "\n";
      } else {
        std::cout << t.to_markdown();
      }
    } else if (run_all->parsed()) {
      brt::run_all(c);
      std::cout << "reports in " << reports_dir(c).string() << "\n";
    } else if (mock->parsed()) {
      brt::MockScanServer server(brt::MockScript::from_json(brt::read_text(mock_script)));
      std::cout << "serving on " << mock_host << ":" << mock_port << "\n" << std::flush;
      server.serve_forever(mock_host, mock_port);
    }
  } catch (const brt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
