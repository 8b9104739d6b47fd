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

#include "brt/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "brt/random.hpp"
#include "brt/transform.hpp"

namespace brt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// String literal pools. Malicious samples draw from strings typical of IoT
// bots, benign samples from ordinary utility messages; both add a few
// shared ones.
const std::vector<std::string> kBenignStrings = {
    "usage: %s [options] <file>", "configuration loaded",     "unable to open input file", "processing input records",
    "checksum mismatch detected", "version 1.4.2 (release)",  "writing output archive",    "cleanup complete",
    "invalid argument supplied",  "reading configuration",    "memory allocation failed",  "operation completed",
    "verbose logging enabled",    "parsing command line",     "no such file or directory", "help: see manual page",
    "backup created successfully", "compressing data stream", "timezone database missing", "locale settings applied",
    "printing summary report",    "sorting entries by name",  "skipping hidden files",     "output written to disk"};
const std::vector<std::string> kMaliciousStrings = {
    "/bin/busybox MIRAI",     "/proc/net/tcp",           "POST /cdn-cgi/l/chk_captcha", "attack_udp_generic",
    "killall -9 telnetd",     "/dev/watchdog",           "wget http://%s/bins.sh",      "TSource Engine Query",
    "HTTPFLOOD started",      "npxXoudifFeEgGaACScs",    "/etc/resolv.conf",            "User-Agent: Mozilla/5.0 bot",
    "GETLOCALIP",             "LOLNOGTFO",               "dvrHelper",                   "scanner_init done",
    "enter telnet login:",    "root:xc3511",             "admin:7ujMko0admin",          "/tmp/.x_update",
    "chmod 777 /tmp/.nttpd",  "echo -e '\\x41\\x4b\\x34'", "/proc/self/exe",            "tftp -g -r mips.bin"};
const std::vector<std::string> kSharedStrings = {"initializing subsystem", "error: %s", "done processing",
                                                 "debug level set", "shutting down now", "received signal"};

const std::vector<std::string> kBenignCalls = {
    "fopen(argv[0], \"r\");",        "strtol(argv[0], 0, 10);",    "time(0);",
    "getenv(\"HOME\");",              "memcmp(argv[0], argv[0], 1);", "atoi(argv[0]);",
    "fflush(stdout);",                "strchr(argv[0], 47);",       "qsort(argv, 0, sizeof *argv, cmp_fn);",
    "setlocale(LC_ALL, \"\");",       "localtime(0);",              "fputs(argv[0], stderr);"};
const std::vector<std::string> kMaliciousCalls = {
    "socket(2, 1, 0);",  "connect(-1, 0, 0);", "fork();",   "kill(0, 9);",   "setsid();",
    "sendto(-1, argv[0], 1, 0, 0, 0);",        "recv(-1, argv[0], 1, 0);",   "inet_addr(argv[0]);",
    "chdir(\"/\");",     "unlink(argv[0]);",   "getppid();", "prctl(15, argv[0]);", "alarm(1);"};

const std::vector<std::string> kBenignOps = {"x = x * 1103515245u + 12345u;", "x += (x >> 7) ^ 0x9e37u;",
                                             "x = (x * 33u) + 5381u;", "x -= x / 3u;"};
const std::vector<std::string> kMaliciousOps = {"x ^= 0x5a5a5a5au;", "x = (x << 3) | (x >> 29);",
                                                "x ^= (x >> 11) ^ 0xdeadbeefu;", "x += 0x41414141u;"};

const std::array<const char*, 3> kOptLevels = {"none", "standard", "aggressive"};
const std::array<const char*, 3> kOptFlags = {"-O0", "-O2", "-O3"};
const std::array<const char*, 3> kFamilies = {"gafgyt", "mirai", "tsunami"};

struct CfgBuilder {
  std::vector<BasicBlock> nodes;
  std::set<Edge> edges;

  std::uint32_t add() {
    const auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back({id, 0x1000 + 16ull * id, 16});
    return id;
  }
  void edge(std::uint32_t a, std::uint32_t b) { edges.insert({a, b}); }
};

struct Program {
  std::string source;
  ControlFlowGraph cfg{{BasicBlock{0, 0, 1}}, {}, 0};
  std::vector<std::string> strings;
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

template <typename T>
std::vector<T> sample_without_replacement(Rng& rng, const std::vector<T>& pool, std::size_t k) {
  std::vector<T> v = pool;
  rng.shuffle(v);
  v.resize(std::min(k, v.size()));
  return v;
}

std::string c_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

class ProgramWriter {
 public:
  ProgramWriter(Rng& rng, bool malicious) : rng_(rng), mal_(malicious) {}

  Program write() {
    std::ostringstream src;
    src << "#include <arpa/inet.h>\n#include <locale.h>\n#include <signal.h>\n#include <stdio.h>\n"
           "#include <stdlib.h>\n#include <string.h>\n#include <sys/prctl.h>\n#include <sys/socket.h>\n"
           "#include <time.h>\n#include <unistd.h>\n\n";
    src << "static int cmp_fn(const void *a, const void *b) { return (int)(a != b); }\n\n";

    Program p;
    p.strings = sample_without_replacement(rng_, mal_ ? kMaliciousStrings : kBenignStrings, 8 + rng_.below(7));
    for (const auto& s : sample_without_replacement(rng_, kSharedStrings, 2 + rng_.below(3))) p.strings.push_back(s);
    src << "static const char *const lits[] = {\n";
    for (const auto& s : p.strings) src << "    \"" << c_escape(s) << "\",\n";
    src << "};\n\n";

    const std::size_t pool = mal_ ? 8192 + 1024 * rng_.below(56) : 256 + 256 * rng_.below(15);
    src << "static unsigned char pool[" << pool << "];\n";
    const std::size_t globals = mal_ ? 10 + rng_.below(5) : rng_.below(3);
    for (std::size_t g = 0; g < globals; ++g) src << "unsigned g" << g << " = " << 1 + rng_.below(1000) << "u;\n";
    src << "\n";

    const std::size_t nfn = 4 + rng_.below(4);
    for (std::size_t f = 0; f < nfn; ++f) src << function(f, "");
    if (mal_) src << function(nfn, "__attribute__((section(\".payload\"))) ");

    // main
    const std::uint32_t entry = g_.add();
    std::uint32_t cur = entry;
    std::ostringstream body;
    body << "  unsigned x = (unsigned)argc * 2654435761u;\n";
    const std::size_t total = fns_.size();
    for (std::size_t f = 0; f < total; ++f) {
      if (f + 2 < total && rng_.uniform() < 0.5) continue;
      body << "  x = fn_" << f << "(x);\n";
      cur = call(cur, f);
    }
    body << "  pool[x % sizeof pool] = (unsigned char)x;\n  x += pool[(x >> 3) % sizeof pool];\n";
    body << "  if (argc > 1000) {\n    for (unsigned k = 0; k < sizeof lits / sizeof *lits; ++k) puts(lits[k]);\n";
    for (const auto& c : sample_without_replacement(rng_, mal_ ? kMaliciousCalls : kBenignCalls, 4 + rng_.below(6))) {
      body << "    " << c << "\n";
    }
    body << "  }\n  printf(\"%u\\n\", x);\n  return 0;\n";
    {
      const std::uint32_t then_b = g_.add(), head = g_.add(), loop = g_.add(), join = g_.add();
      g_.edge(cur, then_b);
      g_.edge(cur, join);
      g_.edge(then_b, head);
      g_.edge(head, loop);
      g_.edge(loop, head);
      g_.edge(head, join);
      cur = join;
    }
    src << "int main(int argc, char **argv) {\n" << body.str() << "}\n";

    p.source = src.str();
    std::vector<Edge> edges(g_.edges.begin(), g_.edges.end());
    p.cfg = ControlFlowGraph(g_.nodes, edges, entry);
    return p;
  }

 private:
  std::string op() { return pick(rng_, mal_ ? kMaliciousOps : kBenignOps); }

  std::uint32_t call(std::uint32_t cur, std::size_t f) {
    g_.edge(cur, fns_[f].first);
    const std::uint32_t ret = g_.add();
    g_.edge(fns_[f].second, ret);
    return ret;
  }

  enum class Kind { Plain, If, IfElse, Loop, Switch, Call };

  Kind draw(std::size_t f, int depth) {
    const double u = rng_.uniform();
    Kind k;
    if (mal_) {
      k = u < 0.35 ? Kind::Switch : u < 0.65 ? Kind::IfElse : u < 0.85 ? Kind::If : u < 0.92 ? Kind::Plain : Kind::Call;
    } else {
      k = u < 0.45 ? Kind::Loop : u < 0.65 ? Kind::If : u < 0.85 ? Kind::Plain : Kind::Call;
    }
    if (k == Kind::Call && f == 0) k = Kind::Plain;
    if (depth > 0 && (k == Kind::Loop || k == Kind::Switch || k == Kind::Call)) k = Kind::If;
    return k;
  }

  std::uint32_t stmt(std::ostringstream& out, std::uint32_t cur, std::size_t f, int depth, const std::string& pad) {
    switch (draw(f, depth)) {
      case Kind::Plain: out << pad << op() << "\n"; return cur;
      case Kind::If: {
        const std::uint32_t t = g_.add(), j = g_.add();
        out << pad << "if (x & " << (1u << rng_.below(8)) << "u) { " << op() << " }\n";
        g_.edge(cur, t);
        g_.edge(cur, j);
        g_.edge(t, j);
        return j;
      }
      case Kind::IfElse: {
        const std::uint32_t t = g_.add(), e = g_.add(), j = g_.add();
        out << pad << "if ((x % " << 3 + rng_.below(5) << "u) == 1u) { " << op() << " } else { " << op() << " }\n";
        g_.edge(cur, t);
        g_.edge(cur, e);
        g_.edge(t, j);
        g_.edge(e, j);
        return j;
      }
      case Kind::Loop: {
        const std::uint32_t h = g_.add(), b = g_.add();
        const std::string iv = "i" + std::to_string(var_++);
        out << pad << "for (unsigned " << iv << " = 0; " << iv << " < " << 3 + rng_.below(7) << "u; ++" << iv
            << ") {\n";
        out << pad << "  x += " << iv << ";\n";
        g_.edge(cur, h);
        g_.edge(h, b);
        const std::uint32_t end = stmt(out, b, f, depth + 1, pad + "  ");
        g_.edge(end, h);
        out << pad << "}\n";
        const std::uint32_t e = g_.add();
        g_.edge(h, e);
        return e;
      }
      case Kind::Switch: {
        const std::size_t cases = 3 + rng_.below(4);
        std::vector<std::uint32_t> arms;
        for (std::size_t c = 0; c < cases; ++c) arms.push_back(g_.add());
        const std::uint32_t j = g_.add();
        out << pad << "switch (x % " << cases + 1 << "u) {\n";
        for (std::size_t c = 0; c < cases; ++c) {
          out << pad << "  case " << c << "u: " << op() << " break;\n";
          g_.edge(cur, arms[c]);
          g_.edge(arms[c], j);
        }
        out << pad << "  default: break;\n" << pad << "}\n";
        g_.edge(cur, j);
        return j;
      }
      case Kind::Call: {
        const std::size_t callee = rng_.below(f);
        out << pad << "x = fn_" << callee << "(x);\n";
        return call(cur, callee);
      }
    }
    return cur;
  }

  std::string function(std::size_t f, const std::string& attrs) {
    std::ostringstream out;
    out << attrs << "__attribute__((noinline)) unsigned fn_" << f << "(unsigned x) {\n";
    const std::uint32_t entry = g_.add();
    std::uint32_t cur = entry;
    const std::size_t n = 3 + rng_.below(4);
    for (std::size_t s = 0; s < n; ++s) cur = stmt(out, cur, f, 0, "  ");
    out << "  return x;\n}\n\n";
    fns_.emplace_back(entry, cur);
    return out.str();
  }

  Rng& rng_;
  bool mal_;
  CfgBuilder g_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> fns_;  // entry, exit
  int var_ = 0;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

// Runs a binary from disk and returns its exit status (-1 when it could not
// be started or was killed).
int run_status(const fs::path& path) {
  const std::string cmd = shell_quote(path.string()) + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

// Minimal x86-64 program: exit(0) followed by class-flavoured filler.
Bytes fallback_binary(const Program& p, bool malicious, Rng& rng) {
  Bytes text = {0xb8, 0x3c, 0x00, 0x00, 0x00, 0x31, 0xff, 0x0f, 0x05};
  const std::size_t filler = 512 + rng.below(1024);
  for (std::size_t i = 0; i < filler; ++i) {
    const bool skew = rng.uniform() < 0.3;
    text.push_back(skew ? (malicious ? 0x5a : 0x90) : static_cast<std::uint8_t>(rng.below(256)));
  }
  Bytes rodata;
  for (const auto& s : p.strings) {
    rodata.insert(rodata.end(), s.begin(), s.end());
    rodata.push_back(0);
  }
  auto build = [&](std::uint64_t entry) {
    ElfBuilder b(64, true, 62);
    b.entry(entry);
    b.add_section({".text", elf::SHT_PROGBITS, elf::SHF_ALLOC | elf::SHF_EXECINSTR, 0, text, 0, 0, 0, 16, 0});
    b.add_section({".rodata", elf::SHT_PROGBITS, elf::SHF_ALLOC, 0, rodata, 0, 0, 0, 8, 0});
    if (malicious) {
      b.add_section({".payload", elf::SHT_PROGBITS, elf::SHF_ALLOC | elf::SHF_EXECINSTR, 0, Bytes(64, 0x5a), 0, 0, 0,
                     16, 0});
    }
    std::vector<ElfBuilder::SymbolSpec> syms;
    for (std::size_t i = 0; i < 4 + (malicious ? 3 : 0); ++i) syms.push_back({"fn_" + std::to_string(i), 0, 16});
    b.add_symbol_table(syms, false);
    ElfBuilder::SegmentSpec load;
    load.flags = elf::PF_R | elf::PF_X;
    load.vaddr = 0x400000;
    b.add_segment(load);
    return b.build();
  };
  Bytes first = build(0x400000);
  const ElfImage img = parse_elf(first);
  return build(0x400000 + img.find_section(".text")->offset);
}

std::string lineage_dir(Lineage l) { return std::string(to_string(l)); }

}  // namespace

std::string manifest_line(const CorpusEntry& e) {
  json j;
  j["digest"] = e.digest;
  j["path"] = e.path;
  j["label"] = std::string(to_string(e.label));
  j["lineage"] = std::string(to_string(e.lineage));
  j["family"] = e.family ? json(*e.family) : json(nullptr);
  j["opt_level"] = e.opt_level;
  j["cfg"] = e.cfg_path;
  j["parent"] = e.parent;
  return j.dump();
}

CorpusEntry parse_manifest_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    CorpusEntry e;
    e.digest = j.at("digest").get<std::string>();
    e.path = j.at("path").get<std::string>();
    e.label = parse_label(j.at("label").get<std::string>());
    e.lineage = parse_lineage(j.value("lineage", std::string("original")));
    if (j.contains("family") && j["family"].is_string()) e.family = j["family"].get<std::string>();
    e.opt_level = j.value("opt_level", std::string());
    e.cfg_path = j.value("cfg", std::string());
    e.parent = j.value("parent", std::string());
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("manifest entry: ") + ex.what());
  }
}

Corpus Corpus::load(const fs::path& root) {
  Corpus c(root);
  const std::string text = read_text(c.manifest_path().string());
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CorpusEntry e = parse_manifest_line(line);
    if (!fs::exists(root / e.path)) throw Error(ErrorCode::IoError, "manifest lists missing file " + e.path);
    c.add(std::move(e));
  }
  return c;
}

void Corpus::save() const {
  std::string text;
  for (const auto& e : entries_) text += manifest_line(e) + "\n";
  fs::create_directories(root_);
  write_text(manifest_path().string(), text);
}

void Corpus::add(CorpusEntry entry) {
  if (entry.label != Label::Benign && entry.label != Label::Malicious) {
    throw Error(ErrorCode::SchemaError, entry.digest + " must be labelled benign or malicious");
  }
  if (find(entry.digest, entry.lineage)) {
    throw Error(ErrorCode::SchemaError, "duplicate " + std::string(to_string(entry.lineage)) + " entry " + entry.digest);
  }
  entries_.push_back(std::move(entry));
}

std::vector<CorpusEntry> Corpus::with_lineage(Lineage lineage) const {
  std::vector<CorpusEntry> out;
  for (const auto& e : entries_) {
    if (e.lineage == lineage) out.push_back(e);
  }
  return out;
}

const CorpusEntry* Corpus::find(const std::string& digest, Lineage lineage) const {
  for (const auto& e : entries_) {
    if (e.digest == digest && e.lineage == lineage) return &e;
  }
  return nullptr;
}

RawBinary Corpus::read(const CorpusEntry& e) const {
  return RawBinary(read_file((root_ / e.path).string()), e.label, e.lineage);
}

std::optional<ControlFlowGraph> Corpus::cfg(const CorpusEntry& e) const {
  if (e.cfg_path.empty()) return std::nullopt;
  return load_cfg_json(read_text((root_ / e.cfg_path).string()));
}

const std::vector<std::string>& malicious_marker_strings() { return kMaliciousStrings; }

bool toolchain_available(const std::string& compiler) {
  const fs::path dir = fs::temp_directory_path() / ("brt-cc-probe-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_text((dir / "probe.c").string(), "int main(void) { return 0; }\n");
  const std::string cmd = shell_quote(compiler) + " -o " + shell_quote((dir / "probe").string()) + " " +
                          shell_quote((dir / "probe.c").string()) + " >/dev/null 2>&1";
  const bool ok = std::system(cmd.c_str()) == 0 && run_status(dir / "probe") == 0;
  std::error_code ec;
  fs::remove_all(dir, ec);
  return ok;
}

Corpus generate_synthetic_corpus(std::size_t n_benign, std::size_t n_malicious, std::uint64_t seed,
                                 const fs::path& outdir, const GeneratorOptions& options) {
  if (n_benign < 10 || n_malicious < 10) {
    throw Error(ErrorCode::InvalidArgument, "the generator needs at least 10 samples per class");
  }
  const bool compile = toolchain_available(options.compiler);
  if (!compile) {
    if (!options.allow_fallback) {
      throw Error(ErrorCode::ToolchainMissing, "compiler '" + options.compiler + "' cannot build programs");
    }
    std::cerr << "warning: compiler '" << options.compiler
              << "' unavailable; generating from the built-in fallback pool\n";
  }
  fs::create_directories(outdir / "original");
  fs::create_directories(outdir / "src");
  fs::create_directories(outdir / "cfg");

  Corpus corpus(outdir);
  const std::size_t total = n_benign + n_malicious;
  for (std::size_t i = 0; i < total; ++i) {
    const bool mal = i >= n_benign;
    const std::size_t k = mal ? i - n_benign : i;
    char name[32];
    std::snprintf(name, sizeof name, "%s_%04zu", mal ? "m" : "b", k);
    Rng rng(Rng::mix(seed, i));
    ProgramWriter writer(rng, mal);
    const Program prog = writer.write();
    const std::size_t level = rng.below(3);

    const std::string src_rel = std::string("src/") + name + ".c";
    const std::string bin_rel = std::string("original/") + name;
    const std::string cfg_rel = std::string("cfg/") + name + ".json";
    write_text((outdir / src_rel).string(), prog.source);
    write_text((outdir / cfg_rel).string(), prog.cfg.to_json());

    CorpusEntry e;
    e.label = mal ? Label::Malicious : Label::Benign;
    if (mal) e.family = kFamilies[rng.below(kFamilies.size())];
    e.path = bin_rel;
    e.cfg_path = cfg_rel;
    if (compile) {
      e.opt_level = kOptLevels[level];
      // Relative paths keep the output independent of where outdir lives.
      std::string cmd = "cd " + shell_quote(outdir.string()) + " && " + shell_quote(options.compiler) + " " +
                        kOptFlags[level] + " -w -o " + shell_quote(bin_rel) + " " + shell_quote(src_rel);
      if (mal) cmd += " -Wl,-z,noseparate-code";
      cmd += " 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        throw Error(ErrorCode::ToolchainMissing, "compiling " + src_rel + " failed");
      }
    } else {
      write_file((outdir / bin_rel).string(), fallback_binary(prog, mal, rng));
      fs::permissions(outdir / bin_rel, fs::perms::owner_all | fs::perms::group_read | fs::perms::others_read);
    }
    const RawBinary raw(read_file((outdir / bin_rel).string()), e.label);
    e.digest = raw.sha256();
    if (options.self_check) {
      parse_elf(raw);
      if (compile && run_status(outdir / bin_rel) != 0) {
        throw Error(ErrorCode::ExternalToolFailed, bin_rel + " did not exit cleanly");
      }
    }
    corpus.add(std::move(e));
  }
  corpus.save();
  return corpus;
}

Corpus ingest_directory(const fs::path& dir, Label label, const fs::path& outdir) {
  std::vector<fs::path> files;
  for (const auto& it : fs::recursive_directory_iterator(dir)) {
    if (it.is_regular_file()) files.push_back(it.path());
  }
  std::sort(files.begin(), files.end());
  Corpus corpus(outdir);
  if (fs::exists(corpus.manifest_path())) corpus = Corpus::load(outdir);
  for (const auto& f : files) {
    if (f.string().ends_with(".cfg.json")) continue;
    RawBinary raw(read_file(f.string()), label);
    try {
      parse_elf(raw);
    } catch (const Error&) {
      continue;
    }
    if (corpus.find(raw.sha256(), Lineage::Original)) continue;
    CorpusEntry e;
    e.digest = raw.sha256();
    e.label = label;
    e.path = fs::relative(fs::absolute(f), fs::absolute(outdir)).string();
    fs::path cfg = f;
    cfg += ".cfg.json";
    if (fs::exists(cfg)) e.cfg_path = fs::relative(fs::absolute(cfg), fs::absolute(outdir)).string();
    corpus.add(std::move(e));
  }
  corpus.save();
  return corpus;
}

ManipulationOp parse_manipulation(std::string_view text) {
  if (text == "pack") return ManipulationOp::Pack;
  if (text == "pack-best" || text == "pack_best") return ManipulationOp::PackBest;
  if (text == "strip") return ManipulationOp::Strip;
  if (text == "pad") return ManipulationOp::Pad;
  throw Error(ErrorCode::InvalidArgument, "unknown manipulation '" + std::string(text) + "'");
}

std::string_view to_string(ManipulationOp op) {
  switch (op) {
    case ManipulationOp::Pack: return "pack";
    case ManipulationOp::PackBest: return "pack-best";
    case ManipulationOp::Strip: return "strip";
    case ManipulationOp::Pad: return "pad";
  }
  return "?";
}

ControlFlowGraph packed_container_cfg(const RawBinary& packed) {
  const ElfImage img = parse_elf(packed);
  const auto off = find_pack_container(packed.view());
  const std::uint64_t size = off ? packed.size() - *off : packed.size();
  return ControlFlowGraph({BasicBlock{0, img.header.entry_vaddr, size}}, {}, 0);
}

void manipulate_corpus(Corpus& corpus, const std::vector<ManipulationOp>& ops, std::uint64_t seed) {
  const auto originals = corpus.with_lineage(Lineage::Original);
  for (const auto op : ops) {
    const Lineage lineage = op == ManipulationOp::Pack       ? Lineage::Packed
                            : op == ManipulationOp::PackBest ? Lineage::PackedBest
                            : op == ManipulationOp::Strip    ? Lineage::Stripped
                                                             : Lineage::Padded;
    const std::string dir = lineage_dir(lineage);
    fs::create_directories(corpus.root() / dir);
    for (std::size_t i = 0; i < originals.size(); ++i) {
      const auto& orig = originals[i];
      const RawBinary raw = corpus.read(orig);
      RawBinary out;
      switch (op) {
        case ManipulationOp::Pack: out = pack_binary(raw, PackLevel::Default); break;
        case ManipulationOp::PackBest: out = pack_binary(raw, PackLevel::Best); break;
        case ManipulationOp::Strip: out = strip_binary(raw); break;
        case ManipulationOp::Pad: {
          Rng rng(Rng::mix(seed, std::stoull(orig.digest.substr(0, 15), nullptr, 16)));
          Bytes tail(raw.size());
          for (auto& b : tail) b = static_cast<std::uint8_t>(rng.below(256));
          out = pad_binary(raw, tail);
          break;
        }
      }
      if (corpus.find(out.sha256(), lineage)) continue;
      CorpusEntry e = orig;
      e.digest = out.sha256();
      e.lineage = lineage;
      e.parent = orig.digest;
      e.path = dir + "/" + fs::path(orig.path).filename().string();
      write_file((corpus.root() / e.path).string(), out.view());
      fs::permissions(corpus.root() / e.path, fs::perms::owner_all | fs::perms::group_read | fs::perms::others_read);
      if (op == ManipulationOp::Pack || op == ManipulationOp::PackBest) {
        e.cfg_path = dir + "/" + fs::path(orig.path).filename().string() + ".cfg.json";
        write_text((corpus.root() / e.cfg_path).string(), packed_container_cfg(out).to_json());
      }
      corpus.add(std::move(e));
    }
  }
  corpus.save();
}

}  // namespace brt
