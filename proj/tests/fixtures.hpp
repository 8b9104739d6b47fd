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
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "brt/common.hpp"
#include "brt/elf.hpp"

namespace brt::testing {

inline std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "brt-tests";
  std::filesystem::create_directories(dir);
  return dir;
}

/// Compiles a C source with the host compiler. Returns an empty path when no
/// compiler is available.
inline std::filesystem::path compile_c(const std::string& name, const std::string& source,
                                       const std::string& flags = "-O1") {
  const auto dir = scratch_dir();
  const auto src = dir / (name + ".c");
  const auto out = dir / name;
  write_text(src.string(), source);
  const std::string cmd = "cc " + flags + " -o '" + out.string() + "' '" + src.string() + "' 2>/dev/null";
  if (std::system(cmd.c_str()) != 0) return {};
  return out;
}

struct RunResult {
  int status = -1;
  std::string output;
};

/// Runs an executable image from disk and captures stdout.
inline RunResult run_binary(const RawBinary& bin, const std::string& name, const std::string& args = "") {
  const auto path = scratch_dir() / name;
  write_file(path.string(), bin.view());
  std::filesystem::permissions(path, std::filesystem::perms::owner_all);
  RunResult r;
  FILE* pipe = popen(("'" + path.string() + "' " + args).c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  r.status = pclose(pipe);
  return r;
}

inline const char* kHelloSource = R"(#include <stdio.h>
#include <string.h>
static const char banner[] = "hello from the fixture";
int counter;
int square(int x) { return x * x; }
int main(int argc, char** argv) {
  int acc = 0;
  for (int i = 1; i < argc; ++i) acc += (int)strlen(argv[i]);
  counter = square(acc % 7);
  printf("%s %d\n", banner, counter);
  return 0;
}
)";

}  // namespace brt::testing
