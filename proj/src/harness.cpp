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

#include "brt/harness.hpp"

#include <cstdio>
#include <iostream>
#include <set>
#include <thread>

#include "brt/random.hpp"
#include "brt/transform.hpp"

namespace brt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string model_label(ModelSlot slot, RepresentationKind kind) {
  switch (resolve(slot, kind)) {
    case ModelKind::LR: return "LR";
    case ModelKind::RF: return "RF";
    case ModelKind::MLP: return "MLP";
    case ModelKind::CNN: return "CNN";
  }
  return "?";
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

ReportTable new_table(const Study& s, std::string kind, std::vector<std::string> columns) {
  ReportTable t;
  t.kind = std::move(kind);
  t.columns = std::move(columns);
  t.config_digest = s.config().digest();
  t.seed = s.config().seed;
  return t;
}

bool wants(const Study& s, RepresentationKind k) {
  const auto& r = s.config().representations;
  return std::find(r.begin(), r.end(), k) != r.end();
}

// Fraction of rows of `x` predicted as `label`.
double share_predicted(const Model& m, const std::vector<Vec>& xs, int label) {
  if (xs.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& x : xs) n += m.predict(x).label == label ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(xs.size());
}

}  // namespace

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string ReportTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_cell(columns[i]);
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_cell(r[i]);
    out += "\n";
  }
  return out;
}

std::string ReportTable::to_markdown() const {
  std::string out = "## " + kind + "\n\n|";
  for (const auto& c : columns) out += " " + c + " |";
  out += "\n|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& r : rows) {
    out += "|";
    for (const auto& c : r) out += " " + (c.empty() ? std::string("---") : c) + " |";
    out += "\n";
  }
  if (!notes.empty()) {
    out += "\n";
    for (const auto& n : notes) out += "- " + n + "\n";
  }
  out += "\nconfig " + config_digest.substr(0, 12) + ", seed " + std::to_string(seed) + "\n";
  return out;
}

json ReportTable::to_json() const {
  return {{"kind", kind}, {"columns", columns}, {"rows", rows},
          {"config_digest", config_digest}, {"seed", seed}, {"notes", notes}};
}

ReportTable ReportTable::from_json(const json& j) {
  ReportTable t;
  try {
    t.kind = j.at("kind").get<std::string>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
    t.config_digest = j.value("config_digest", std::string());
    t.seed = j.value("seed", std::uint64_t{0});
    t.notes = j.value("notes", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("report table: ") + e.what());
  }
  return t;
}

void ReportTable::write(const fs::path& dir) const {
  fs::create_directories(dir);
  write_text((dir / (kind + ".csv")).string(), to_csv());
  write_text((dir / (kind + ".md")).string(), to_markdown());
  write_text((dir / (kind + ".json")).string(), to_json().dump(2) + "\n");
}

Study::Study(ExperimentConfig config, Corpus corpus) : config_(std::move(config)), corpus_(std::move(corpus)) {
  originals_ = corpus_.with_lineage(Lineage::Original);
  if (originals_.empty()) throw Error(ErrorCode::InvalidArgument, "the corpus has no original samples");
  std::vector<int> y;
  for (const auto& e : originals_) y.push_back(e.label == Label::Malicious ? 1 : 0);
  split_ = stratified_split(y, 1.0 - config_.split, config_.seed);
  for (const auto& e : originals_) test_[e.digest] = false;
  for (auto i : split_.test) test_[originals_[i].digest] = true;

  std::vector<std::vector<std::string>> docs;
  for (auto i : split_.train) docs.push_back(extract_strings(corpus_.read(originals_[i])));
  vocab_ = build_vocabulary(docs, config_.vocab_k);
}

FeatureContext Study::context() const {
  FeatureContext ctx;
  ctx.image = config_.image;
  ctx.vocab = &vocab_;
  ctx.adjacency_dim = config_.adjacency_dim;
  return ctx;
}

bool Study::is_test(const std::string& original_digest) const {
  auto it = test_.find(original_digest);
  return it != test_.end() && it->second;
}

FeatureVector Study::features(RepresentationKind kind, const RawBinary& raw, const ControlFlowGraph* cfg) const {
  std::optional<ElfImage> elf;
  const bool needs_elf = kind == RepresentationKind::Symbols || kind == RepresentationKind::Sections ||
                         kind == RepresentationKind::Segments || kind == RepresentationKind::Hexdump ||
                         kind == RepresentationKind::Combined;
  if (needs_elf) elf = parse_elf(raw);
  FeatureVector f = extract(kind, raw, elf ? &*elf : nullptr, cfg, context());
  f.digest = raw.sha256();
  return f;
}

FeatureVector Study::features(RepresentationKind kind, const CorpusEntry& e) const {
  const RawBinary raw = corpus_.read(e);
  std::optional<ControlFlowGraph> cfg;
  if (kind == RepresentationKind::CfgAdjacency || kind == RepresentationKind::CfgAlgorithmic) cfg = corpus_.cfg(e);
  try {
    return features(kind, raw, cfg ? &*cfg : nullptr);
  } catch (const Error& err) {
    throw Error(err.code(), std::string(to_string(kind)) + " features of " + e.path + ": " + err.what());
  }
}

const Dataset& Study::dataset(RepresentationKind kind) {
  auto it = datasets_.find(kind);
  if (it != datasets_.end()) return it->second;
  std::vector<FeatureVector> rows;
  std::vector<int> y;
  for (const auto& e : originals_) {
    rows.push_back(features(kind, e));
    y.push_back(e.label == Label::Malicious ? 1 : 0);
  }
  return datasets_.emplace(kind, Dataset::build(kind, feature_shape(kind, context()), rows, y, split_)).first->second;
}

const Model& Study::model(RepresentationKind kind, ModelSlot slot) {
  const auto key = std::make_pair(kind, slot);
  if (auto it = models_.find(key); it != models_.end()) return *it->second;
  const ModelKind mk = resolve(slot, kind);
  const std::string stem = std::string(to_string(kind)) + "_" + std::string(to_string(mk));
  // Stored models are reused only when config and corpus are unchanged.
  const json cj = config_.to_json();
  std::string stamp = json{{"kind", stem}, {"seed", cj["seed"]}, {"split", cj["split"]}, {"image", cj["image"]},
                           {"adjacency_dim", cj["adjacency_dim"]}, {"vocab_k", cj["vocab_k"]},
                           {"train", cj["train"]}}
                          .dump();
  for (const auto& e : originals_) stamp += e.digest;
  stamp = sha256_hex(ByteView(reinterpret_cast<const std::uint8_t*>(stamp.data()), stamp.size()));
  const fs::path key_path = models_dir_ ? *models_dir_ / (stem + ".key") : fs::path();
  std::unique_ptr<Model> m;
  if (models_dir_ && fs::exists(key_path) && read_text(key_path.string()) == stamp) {
    m = load_model(read_text((*models_dir_ / (stem + ".json")).string()),
                   read_file((*models_dir_ / (stem + ".mdl")).string()));
  } else {
    const Dataset& d = dataset(kind);
    try {
      Hyperparams hp = config_.hyperparams(mk);
      hp.seed = config_.seed;
      m = train(mk, d, hp);
    } catch (const Error& err) {
      throw Error(err.code(), "training " + stem + ": " + err.what());
    }
    if (models_dir_) {
      fs::create_directories(*models_dir_);
      write_text((*models_dir_ / (stem + ".json")).string(), model_envelope(*m, d.shape));
      write_file((*models_dir_ / (stem + ".mdl")).string(), save_model_blob(*m));
      write_text(key_path.string(), stamp);
    }
  }
  return *models_.emplace(key, std::move(m)).first->second;
}

std::vector<std::size_t> Study::attack_rows() {
  std::vector<std::size_t> rows;
  for (auto i : split_.test) {
    if (originals_[i].label == Label::Malicious) rows.push_back(i);
  }
  if (config_.attack_samples > 0 && rows.size() > config_.attack_samples) rows.resize(config_.attack_samples);
  return rows;
}

ReportTable run_baseline(Study& study) {
  std::vector<std::string> cols{"representation"};
  for (auto slot : study.config().models) {
    std::string name(to_string(slot));
    std::transform(name.begin(), name.end(), name.begin(), ::toupper);
    cols.push_back(name);
  }
  cols.push_back("nn_model");
  ReportTable t = new_table(study, "baseline", cols);
  for (auto kind : study.config().representations) {
    std::vector<std::string> row{std::string(to_string(kind))};
    for (auto slot : study.config().models) {
      row.push_back(format_accuracy(evaluate(study.model(kind, slot), study.dataset(kind)).accuracy));
    }
    row.push_back(model_label(ModelSlot::Nn, kind));
    t.rows.push_back(std::move(row));
  }
  return t;
}

ReportTable run_noise(Study& study) {
  std::vector<std::string> cols{"representation", "model", "0.00"};
  for (double d : study.config().deltas) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", d);
    cols.push_back(buf);
  }
  ReportTable t = new_table(study, "noise_curves", cols);
  t.notes.push_back(std::string("noise mode ") + std::string(to_string(study.config().noise_mode)) +
                    "; column 0.00 is the unperturbed baseline");
  for (auto kind : study.config().representations) {
    for (auto slot : study.config().models) {
      const Model& m = study.model(kind, slot);
      const auto sweep =
          noise_sweep(m, study.dataset(kind), study.config().deltas, study.config().seed, study.config().noise_mode);
      std::vector<std::string> row{std::string(to_string(kind)), model_label(slot, kind),
                                   format_accuracy(sweep.baseline)};
      for (double a : sweep.accuracy) row.push_back(format_accuracy(a));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

WhiteboxOutput run_whitebox(Study& study) {
  WhiteboxOutput out;
  out.table = new_table(study, "whitebox", {"representation", "attack", "attack_type", "model", "samples",
                                            "original_accuracy", "adversarial_accuracy", "attack_success"});
  const auto& cfg = study.config();
  const auto rows = study.attack_rows();
  const auto& originals = study.originals();

  // Attack outcomes awaiting their victim verdicts.
  struct Pending {
    std::string digest;
    RepresentationKind kind;
    Constraint constraint;
    AdversarialResult result;
    std::vector<TransferRow> victims;
  };
  std::vector<Pending> pending;

  // Appends one row per victim; `direct` marks the source model's slot.
  auto report = [&](RepresentationKind kind, const std::string& attack, const std::vector<Vec>& before,
                    const std::vector<Vec>& after, std::optional<ModelSlot> direct, double success) {
    for (auto slot : cfg.models) {
      const Model& victim = study.model(kind, slot);
      const bool is_direct = direct && *direct == slot;
      out.table.rows.push_back({std::string(to_string(kind)), attack, is_direct ? "Direct" : "Transferred",
                                model_label(slot, kind), std::to_string(before.size()),
                                format_accuracy(share_predicted(victim, before, 1)),
                                format_accuracy(share_predicted(victim, after, 1)),
                                is_direct ? format_accuracy(success) : ""});
      const std::string name = std::string(to_string(kind)) + "/" + model_label(slot, kind);
      for (std::size_t j = 0; j < pending.size() && j < before.size(); ++j) {
        pending[j].victims.push_back({name, victim.predict(before[j]).label == 1 ? 1.0 : 0.0,
                                      victim.predict(after[j]).label == 1 ? 1.0 : 0.0});
      }
    }
  };
  auto record = [&](const std::string& digest, RepresentationKind kind, Constraint c, const AdversarialResult& r) {
    pending.push_back({digest, kind, c, r, {}});
  };
  auto flush = [&] {
    for (const auto& p : pending) {
      out.records.push_back(attack_record_json(p.digest, p.kind, p.constraint, p.result, p.victims));
    }
    pending.clear();
  };

  if (wants(study, RepresentationKind::Image)) {
    const Model& cnn = study.model(RepresentationKind::Image, ModelSlot::Nn);
    std::vector<Vec> before, after;
    std::size_t ok = 0;
    for (auto i : rows) {
      const RawBinary raw = study.corpus().read(originals[i]);
      AttackConfig ac = cfg.padding_attack;
      ac.target = 0;
      const auto res = padding_attack(cnn, raw, cfg.image, ac);
      before.push_back(to_vec(study.features(RepresentationKind::Image, raw, nullptr).values));
      after.push_back(to_vec(study.features(RepresentationKind::Image, res.binary, nullptr).values));
      ok += res.result.success ? 1 : 0;
      record(originals[i].digest, RepresentationKind::Image, Constraint::LowerHalf, res.result);
    }
    report(RepresentationKind::Image, "padding", before, after, ModelSlot::Nn,
           rows.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(rows.size()));
    flush();
  }

  const bool adj = wants(study, RepresentationKind::CfgAdjacency);
  const bool alg = wants(study, RepresentationKind::CfgAlgorithmic);
  if (adj || alg) {
    const Model& cnn = study.model(RepresentationKind::CfgAdjacency, ModelSlot::Nn);
    std::vector<Vec> before, after, alg_before, alg_after;
    std::size_t ok = 0;
    for (auto i : rows) {
      const auto g = study.corpus().cfg(originals[i]);
      if (!g) throw Error(ErrorCode::MissingContext, originals[i].path + " has no CFG");
      const AdjacencyMatrix m = adjacency_matrix(*g, cfg.adjacency_dim);
      AttackConfig ac = cfg.graph_attack;
      ac.target = 0;
      const auto res = graph_attack(cnn, m, ac);
      std::vector<double> cells(res.perturbed.cells.begin(), res.perturbed.cells.end());
      before.push_back(to_vec(std::vector<double>(m.cells.begin(), m.cells.end())));
      after.push_back(to_vec(cells));
      alg_before.push_back(to_vec(cfg_algorithmic_vec(*g).values));
      alg_after.push_back(to_vec(cfg_algorithmic_vec(graph_from_matrix(cells, m.dim, m.mapped)).values));
      ok += res.result.success ? 1 : 0;
      record(originals[i].digest, RepresentationKind::CfgAdjacency, Constraint::AddOnly, res.result);
    }
    if (adj) {
      report(RepresentationKind::CfgAdjacency, "graph", before, after, ModelSlot::Nn,
             rows.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(rows.size()));
    }
    if (alg) report(RepresentationKind::CfgAlgorithmic, "graph", alg_before, alg_after, std::nullopt, 0.0);
    flush();
  }

  if (wants(study, RepresentationKind::Strings)) {
    const Model& mlp = study.model(RepresentationKind::Strings, ModelSlot::Nn);
    std::vector<Vec> before, after;
    std::size_t ok = 0;
    for (auto i : rows) {
      const FeatureVector bow = study.features(RepresentationKind::Strings, originals[i]);
      AttackConfig ac = cfg.string_attack;
      ac.target = 0;
      const auto res = string_attack(mlp, bow, ac);
      before.push_back(to_vec(bow.values));
      after.push_back(res.x_prime);
      ok += res.success ? 1 : 0;
      record(originals[i].digest, RepresentationKind::Strings, Constraint::AdditiveOnly, res);
    }
    report(RepresentationKind::Strings, "string", before, after, ModelSlot::Nn,
           rows.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(rows.size()));
    flush();
  }
  out.table.notes.push_back("attacked set: malicious test samples, target benign");
  return out;
}

ReportTable run_manipulation(Study& study) {
  const std::vector<Lineage> lineages{Lineage::Original, Lineage::Packed, Lineage::PackedBest, Lineage::Stripped,
                                      Lineage::Padded};
  std::vector<std::string> cols{"representation", "model", "class"};
  for (auto l : lineages) cols.push_back(std::string(to_string(l)));
  ReportTable t = new_table(study, "manipulation", cols);
  t.notes.push_back("packed samples use the CFG of their container (one entry block) in cfg_* rows");

  // Test-split members per lineage, in manifest order.
  std::map<Lineage, std::vector<CorpusEntry>> sets;
  for (const auto& e : study.corpus().entries()) {
    const std::string& origin = e.lineage == Lineage::Original ? e.digest : e.parent;
    if (study.is_test(origin)) sets[e.lineage].push_back(e);
  }
  for (auto kind : study.config().representations) {
    std::map<Lineage, std::vector<std::pair<Vec, int>>> feats;
    for (const auto& [l, entries] : sets) {
      for (const auto& e : entries) {
        feats[l].emplace_back(to_vec(study.features(kind, e).values), e.label == Label::Malicious ? 1 : 0);
      }
    }
    for (auto slot : study.config().models) {
      const Model& m = study.model(kind, slot);
      for (int cls : {0, 1}) {
        std::vector<std::string> row{std::string(to_string(kind)), model_label(slot, kind),
                                     cls ? "malicious" : "benign"};
        for (auto l : lineages) {
          std::size_t n = 0, hit = 0;
          for (const auto& [x, y] : feats[l]) {
            if (y != cls) continue;
            ++n;
            hit += m.predict(x).label == y ? 1 : 0;
          }
          row.push_back(n ? format_accuracy(static_cast<double>(hit) / static_cast<double>(n)) : "");
        }
        t.rows.push_back(std::move(row));
      }
    }
  }
  return t;
}

EngineOutput run_engines(Study& study) {
  const auto& cfg = study.config();
  std::unique_ptr<MockScanServer> mock;
  ScanClientConfig sc = cfg.scan;
  if (!cfg.mock_script.empty()) {
    mock = std::make_unique<MockScanServer>(MockScript::from_json(read_text(cfg.mock_script)));
    mock->start();
    sc.endpoint = mock->endpoint();
  }
  if (sc.endpoint.empty()) {
    throw Error(ErrorCode::ConfigError, "no scan endpoint configured (set scan.endpoint or scan.mock_script)");
  }
  ScanClient client(sc);
  std::vector<RawBinary> samples;
  std::map<std::string, std::string> categories;
  for (const auto& e : study.corpus().entries()) {
    samples.push_back(study.corpus().read(e));
    categories[e.digest] = std::string(to_string(e.label)) + "/" + std::string(to_string(e.lineage));
  }
  const auto ids = client.submit_all(samples);
  if (sc.min_age_seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(sc.min_age_seconds));
  std::vector<ScanReport> reports;
  std::set<std::string> fetched;
  for (const auto& id : ids) {
    if (!fetched.insert(id).second) continue;
    for (int attempt = 0;; ++attempt) {
      try {
        reports.push_back(client.fetch(id));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotReady || attempt >= 20) throw;
        std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min(attempt, 6)));
      }
    }
  }
  const Aggregation agg = aggregate(reports, categories, cfg.seed, cfg.min_samples);

  EngineOutput out;
  std::vector<std::string> cols{"engine", "ai"};
  for (const auto& d : agg.distributions) cols.push_back(d.category);
  out.engines = new_table(study, "engine_table", cols);
  for (const auto& e : agg.engines) {
    std::vector<std::string> row{e.anonymized_id, e.engine_kind == EngineKind::Ai ? "yes" : ""};
    for (const auto& d : agg.distributions) {
      auto it = e.rate.find(d.category);
      if (it == e.rate.end() || !it->second) {
        row.push_back("");
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", *it->second);
        row.push_back(buf);
      }
    }
    out.engines.rows.push_back(std::move(row));
  }
  out.engines.notes.push_back("rates in percent; engines with fewer than " + std::to_string(cfg.min_samples) +
                              " samples in a category are left blank (per-category rule)");
  out.distributions = new_table(study, "distributions", {"category", "detections", "samples"});
  for (const auto& d : agg.distributions) {
    for (const auto& [k, v] : d.histogram) {
      out.distributions.rows.push_back({d.category, std::to_string(k), std::to_string(v)});
    }
  }
  return out;
}

void run_all(const ExperimentConfig& config) {
  const fs::path out = config.output;
  fs::create_directories(out / "reports");
  write_text((out / "config.json").string(), config.to_json().dump(2) + "\n");

  const fs::path corpus_dir = config.corpus_path();
  Corpus corpus = fs::exists(corpus_dir / "manifest.jsonl")
                      ? Corpus::load(corpus_dir)
                      : generate_synthetic_corpus(config.n_benign, config.n_malicious, config.seed, corpus_dir,
                                                  GeneratorOptions{config.compiler});
  manipulate_corpus(corpus, config.ops, config.seed);

  Study study(config, corpus);
  study.set_models_dir(out / "models");
  const fs::path reports = out / "reports";
  std::vector<ReportTable> tables;
  tables.push_back(run_baseline(study));
  tables.push_back(run_noise(study));
  const auto wb = run_whitebox(study);
  tables.push_back(wb.table);
  std::string jsonl;
  for (const auto& r : wb.records) jsonl += r + "\n";
  write_text((reports / "attacks.jsonl").string(), jsonl);
  tables.push_back(run_manipulation(study));
  if (!config.mock_script.empty() || !config.scan.endpoint.empty()) {
    auto eng = run_engines(study);
    tables.push_back(std::move(eng.engines));
    tables.push_back(std::move(eng.distributions));
  }

  std::string summary = "# Run summary\n\n";
  json files = json::array();
  for (const auto& t : tables) {
    t.write(reports);
    summary += t.to_markdown() + "\n";
    for (const char* ext : {".csv", ".json", ".md"}) files.push_back("reports/" + t.kind + ext);
  }
  files.push_back("reports/attacks.jsonl");
  write_text((out / "summary.md").string(), summary);
  const std::string manifest = read_text(corpus.manifest_path().string());
  const json run{{"config_digest", config.digest()},
                 {"seed", config.seed},
                 {"corpus", corpus.root().string()},
                 {"corpus_manifest_sha256",
                  sha256_hex(ByteView(reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size()))},
                 {"samples", corpus.entries().size()},
                 {"reports", files}};
  write_text((out / "run.json").string(), run.dump(2) + "\n");
}

}  // namespace brt
