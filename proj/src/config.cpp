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

#include "brt/config.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <cmath>

namespace brt {

using nlohmann::json;

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (!eof() && peek() == '[') fail("arrays of tables are not supported");
        skip_ws();
        std::vector<std::string> path = key_path();
        skip_ws();
        expect(']');
        table = &root;
        for (const auto& k : path) {
          json& next = (*table)[k];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("'" + k + "' is not a table");
          table = &next;
        }
        if (defined_.count(joined(path))) fail("table [" + joined(path) + "] defined twice");
        defined_.insert(joined(path));
        end_of_line();
        continue;
      }
      key_value(*table);
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_) + ": " + msg);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  static std::string joined(const std::vector<std::string>& p) {
    std::string out;
    for (const auto& k : p) out += (out.empty() ? "" : ".") + k;
    return out;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        if (peek() == '\n') ++line_;
        ++pos_;
        continue;
      }
      break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++pos_;
    if (eof() || peek() != '\n') fail("unexpected text after value");
  }

  std::string key() {
    if (eof()) fail("expected a key");
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }
  std::vector<std::string> key_path() {
    std::vector<std::string> p{key()};
    skip_ws();
    while (!eof() && peek() == '.') {
      ++pos_;
      skip_ws();
      p.push_back(key());
      skip_ws();
    }
    return p;
  }

  void key_value(json& table) {
    const auto path = key_path();
    skip_ws();
    expect('=');
    skip_ws();
    json* t = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& next = (*t)[path[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("'" + path[i] + "' is not a table");
      t = &next;
    }
    if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*t)[path.back()] = value();
  }

  json value() {
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

  json number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string tok;
    for (std::size_t i = start; i < pos_; ++i) {
      if (s_[i] != '_') tok += s_[i];
    }
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos && tok.rfind("0x", 0) != 0;
    if (!is_float) {
      std::int64_t v = 0;
      const char* b = tok.data();
      const char* e = b + tok.size();
      if (*b == '+') ++b;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e) fail("bad number '" + tok + "'");
      return v;
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v)) fail("bad number '" + tok + "'");
    return v;
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated escape");
      c = s_[pos_++];
      switch (c) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'u': {
          if (pos_ + 4 > s_.size()) fail("short \\u escape");
          const unsigned cp = static_cast<unsigned>(std::stoul(s_.substr(pos_, 4), nullptr, 16));
          pos_ += 4;
          if (cp < 0x80) {
            out += static_cast<char>(cp);
          } else if (cp < 0x800) {
            out += static_cast<char>(0xc0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3f));
          } else {
            out += static_cast<char>(0xe0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
          }
          break;
        }
        default: fail(std::string("unknown escape \\") + c);
      }
    }
    return out;
  }

  std::string literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (eof() || peek() != '\'') fail("unterminated string");
    std::string out = s_.substr(start, pos_ - start);
    ++pos_;
    return out;
  }

  json array() {
    expect('[');
    json arr = json::array();
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(value());
      skip_ws_comments_newlines();
      if (!eof() && peek() == ',') {
        ++pos_;
        continue;
      }
      skip_ws_comments_newlines();
      expect(']');
      return arr;
    }
  }

  json inline_table() {
    expect('{');
    json t = json::object();
    skip_ws();
    if (!eof() && peek() == '}') {
      ++pos_;
      return t;
    }
    while (true) {
      skip_ws();
      key_value(t);
      skip_ws();
      if (!eof() && peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return t;
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::set<std::string> defined_;
};

[[noreturn]] void config_fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(std::string("'") + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) config_fail(std::string("'") + key + "' must be a count");
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

void read_hyperparams(const json& j, Hyperparams& hp) {
  if (!j.is_object()) return;
  hp.epochs = get_count(j, "epochs", hp.epochs);
  hp.learning_rate = get<double>(j, "learning_rate", hp.learning_rate);
  hp.batch_size = get_count(j, "batch_size", hp.batch_size);
  hp.optimizer = get<std::string>(j, "optimizer", hp.optimizer);
  hp.rf_trees = get_count(j, "trees", hp.rf_trees);
  if (j.contains("max_depth")) hp.rf_max_depth = get_count(j, "max_depth", 0);
  hp.rf_bootstrap = get<bool>(j, "bootstrap", hp.rf_bootstrap);
  if (j.contains("hidden")) hp.mlp_hidden = get<std::vector<std::size_t>>(j, "hidden", {});
  hp.cnn.conv1_filters = get_count(j, "conv1_filters", hp.cnn.conv1_filters);
  hp.cnn.conv2_filters = get_count(j, "conv2_filters", hp.cnn.conv2_filters);
  hp.cnn.kernel = get_count(j, "kernel", hp.cnn.kernel);
  hp.cnn.dense = get_count(j, "dense", hp.cnn.dense);
}

json hyperparams_json(const Hyperparams& hp) {
  json j{{"epochs", hp.epochs},         {"learning_rate", hp.learning_rate}, {"batch_size", hp.batch_size},
         {"optimizer", hp.optimizer},   {"trees", hp.rf_trees},             {"bootstrap", hp.rf_bootstrap},
         {"hidden", hp.mlp_hidden},     {"conv1_filters", hp.cnn.conv1_filters},
         {"conv2_filters", hp.cnn.conv2_filters}, {"kernel", hp.cnn.kernel}, {"dense", hp.cnn.dense},
         {"seed", hp.seed}};
  j["max_depth"] = hp.rf_max_depth ? json(*hp.rf_max_depth) : json(nullptr);
  return j;
}

void read_attack(const json& j, AttackConfig& a) {
  if (!j.is_object()) return;
  a.max_iters = get_count(j, "max_iters", a.max_iters);
  a.inner_iters = get_count(j, "inner_iters", a.inner_iters);
  a.step = get<double>(j, "step", a.step);
  a.c_search_steps = get_count(j, "c_search_steps", a.c_search_steps);
  a.c_init = get<double>(j, "c_init", a.c_init);
  a.kappa = get<double>(j, "kappa", a.kappa);
  a.tau_init = get<double>(j, "tau_init", a.tau_init);
  a.tau_decay = get<double>(j, "tau_decay", a.tau_decay);
  a.target = static_cast<int>(get<std::int64_t>(j, "target", a.target));
  a.line_search_steps = get_count(j, "line_search_steps", a.line_search_steps);
}

json attack_json(const AttackConfig& a) {
  return {{"max_iters", a.max_iters}, {"inner_iters", a.inner_iters},       {"step", a.step},
          {"c_search_steps", a.c_search_steps}, {"c_init", a.c_init},       {"kappa", a.kappa},
          {"tau_init", a.tau_init}, {"tau_decay", a.tau_decay},             {"target", a.target},
          {"constraint", std::string(to_string(a.constraint))}, {"line_search_steps", a.line_search_steps}};
}

}  // namespace

json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

std::string_view to_string(ModelSlot slot) {
  switch (slot) {
    case ModelSlot::Lr: return "lr";
    case ModelSlot::Rf: return "rf";
    case ModelSlot::Nn: return "nn";
  }
  return "?";
}

ModelKind resolve(ModelSlot slot, RepresentationKind kind) {
  switch (slot) {
    case ModelSlot::Lr: return ModelKind::LR;
    case ModelSlot::Rf: return ModelKind::RF;
    case ModelSlot::Nn: return is_spatial(kind) ? ModelKind::CNN : ModelKind::MLP;
  }
  return ModelKind::LR;
}

const Hyperparams& ExperimentConfig::hyperparams(ModelKind kind) const {
  switch (kind) {
    case ModelKind::LR: return lr;
    case ModelKind::RF: return rf;
    case ModelKind::MLP: return mlp;
    case ModelKind::CNN: return cnn;
  }
  return lr;
}

void ExperimentConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) config_fail("split must lie in (0,1)");
  try {
    image.validate();
    for (const auto* hp : {&lr, &rf, &mlp, &cnn}) hp->validate();
    graph_attack.validate();
    string_attack.validate();
    AttackConfig pad = padding_attack;
    pad.rows = image.h;
    pad.validate();
  } catch (const Error& e) {
    config_fail(e.what());
  }
  if (adjacency_dim < 4) config_fail("adjacency_dim must be at least 4");
  if (vocab_k < 1) config_fail("vocab_k must be at least 1");
  if (!std::is_sorted(deltas.begin(), deltas.end())) config_fail("noise deltas must be ascending");
  for (double d : deltas) {
    if (!(d > 0.0 && d <= 1.0)) config_fail("noise deltas must lie in (0,1]");
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["representations"] = json::array();
  for (auto k : representations) j["representations"].push_back(std::string(to_string(k)));
  j["models"] = json::array();
  for (auto m : models) j["models"].push_back(std::string(to_string(m)));
  j["split"] = split;
  j["seed"] = seed;
  j["image"] = {{"h", image.h}, {"w", image.w}};
  j["adjacency_dim"] = adjacency_dim;
  j["vocab_k"] = vocab_k;
  j["output"] = output;
  json ops_j = json::array();
  for (auto op : ops) ops_j.push_back(std::string(to_string(op)));
  j["corpus"] = {{"dir", corpus_dir}, {"benign", n_benign}, {"malicious", n_malicious}, {"compiler", compiler},
                 {"ops", ops_j}};
  j["train"] = {{"lr", hyperparams_json(lr)}, {"rf", hyperparams_json(rf)}, {"mlp", hyperparams_json(mlp)},
                {"cnn", hyperparams_json(cnn)}};
  j["noise"] = {{"deltas", deltas}, {"mode", std::string(to_string(noise_mode))}};
  j["attack"] = {{"graph", attack_json(graph_attack)},
                 {"string", attack_json(string_attack)},
                 {"padding", attack_json(padding_attack)},
                 {"samples", attack_samples}};
  json ai = json::object();
  for (const auto& [e, k] : scan.ai_engines) ai[e] = std::string(to_string(k));
  j["scan"] = {{"endpoint", scan.endpoint},         {"api_key_env", scan.api_key_env},
               {"min_age", scan.min_age_seconds},   {"max_file_size", scan.max_file_size},
               {"max_in_flight", scan.max_in_flight}, {"mock_script", mock_script},
               {"min_samples", min_samples},        {"engines", ai}};
  return j;
}

std::string ExperimentConfig::digest() const {
  const std::string text = to_json().dump();
  return sha256_hex(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  if (!doc.is_object()) config_fail("config root must be a table");
  if (doc.contains("representations")) {
    c.representations.clear();
    for (const auto& r : get<std::vector<std::string>>(doc, "representations", {})) {
      try {
        c.representations.push_back(parse_kind(r));
      } catch (const Error&) {
        config_fail("unknown representation '" + r + "'");
      }
    }
  }
  if (doc.contains("models")) {
    c.models.clear();
    for (const auto& m : get<std::vector<std::string>>(doc, "models", {})) {
      if (m == "lr") {
        c.models.push_back(ModelSlot::Lr);
      } else if (m == "rf") {
        c.models.push_back(ModelSlot::Rf);
      } else if (m == "nn" || m == "mlp" || m == "cnn") {
        // An explicit network family must agree with the mapping for every kind.
        for (auto k : c.representations) {
          const ModelKind want = resolve(ModelSlot::Nn, k);
          if ((m == "mlp" && want != ModelKind::MLP) || (m == "cnn" && want != ModelKind::CNN)) {
            config_fail("model '" + m + "' is not valid for representation '" + std::string(to_string(k)) + "'");
          }
        }
        c.models.push_back(ModelSlot::Nn);
      } else {
        config_fail("unknown model '" + m + "'");
      }
    }
  }
  c.split = get<double>(doc, "split", c.split);
  c.seed = static_cast<std::uint64_t>(get<std::int64_t>(doc, "seed", 0));
  c.adjacency_dim = get_count(doc, "adjacency_dim", c.adjacency_dim);
  c.vocab_k = get_count(doc, "vocab_k", c.vocab_k);
  c.output = get<std::string>(doc, "output", c.output);
  if (doc.contains("image")) {
    c.image.h = get_count(doc["image"], "h", c.image.h);
    c.image.w = get_count(doc["image"], "w", c.image.w);
  }
  if (doc.contains("corpus")) {
    const json& j = doc["corpus"];
    c.corpus_dir = get<std::string>(j, "dir", c.corpus_dir);
    c.n_benign = get_count(j, "benign", c.n_benign);
    c.n_malicious = get_count(j, "malicious", c.n_malicious);
    c.compiler = get<std::string>(j, "compiler", c.compiler);
    if (j.contains("ops")) {
      c.ops.clear();
      for (const auto& op : get<std::vector<std::string>>(j, "ops", {})) {
        try {
          c.ops.push_back(parse_manipulation(op));
        } catch (const Error& e) {
          config_fail(e.what());
        }
      }
    }
  }
  if (doc.contains("train")) {
    const json& t = doc["train"];
    for (auto* hp : {&c.lr, &c.rf, &c.mlp, &c.cnn}) read_hyperparams(t, *hp);
    if (t.contains("lr")) read_hyperparams(t["lr"], c.lr);
    if (t.contains("rf")) read_hyperparams(t["rf"], c.rf);
    if (t.contains("mlp")) read_hyperparams(t["mlp"], c.mlp);
    if (t.contains("cnn")) read_hyperparams(t["cnn"], c.cnn);
  }
  for (auto* hp : {&c.lr, &c.rf, &c.mlp, &c.cnn}) hp->seed = c.seed;
  if (doc.contains("noise")) {
    const json& n = doc["noise"];
    if (n.contains("deltas")) c.deltas = get<std::vector<double>>(n, "deltas", {});
    if (n.contains("mode")) {
      try {
        c.noise_mode = parse_noise_mode(get<std::string>(n, "mode", "gaussian"));
      } catch (const Error& e) {
        config_fail(e.what());
      }
    }
  }
  c.graph_attack.constraint = Constraint::AddOnly;
  c.string_attack.constraint = Constraint::AdditiveOnly;
  c.padding_attack.constraint = Constraint::LowerHalf;
  if (doc.contains("attack")) {
    const json& a = doc["attack"];
    for (auto* ac : {&c.graph_attack, &c.string_attack, &c.padding_attack}) read_attack(a, *ac);
    if (a.contains("graph")) read_attack(a["graph"], c.graph_attack);
    if (a.contains("string")) read_attack(a["string"], c.string_attack);
    if (a.contains("padding")) read_attack(a["padding"], c.padding_attack);
    c.attack_samples = get_count(a, "samples", c.attack_samples);
  }
  if (doc.contains("scan")) {
    const json& s = doc["scan"];
    c.scan.endpoint = get<std::string>(s, "endpoint", c.scan.endpoint);
    c.scan.api_key_env = get<std::string>(s, "api_key_env", c.scan.api_key_env);
    c.scan.min_age_seconds = get<double>(s, "min_age", c.scan.min_age_seconds);
    c.scan.max_file_size = get_count(s, "max_file_size", c.scan.max_file_size);
    c.scan.max_in_flight = get_count(s, "max_in_flight", c.scan.max_in_flight);
    c.mock_script = get<std::string>(s, "mock_script", c.mock_script);
    c.min_samples = get_count(s, "min_samples", c.min_samples);
    if (s.contains("engines")) {
      for (const auto& [engine, kind] : s["engines"].items()) {
        try {
          c.scan.ai_engines[engine] = parse_engine_kind(kind.get<std::string>());
        } catch (const std::exception& e) {
          config_fail("scan.engines." + engine + ": " + e.what());
        }
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& toml_text) { return config_from_json(parse_toml(toml_text)); }

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text(path)); }

}  // namespace brt
