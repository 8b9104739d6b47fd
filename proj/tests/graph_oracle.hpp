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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "brt/cfg.hpp"

namespace brt::testing {

/// Reference graph features: Floyd-Warshall distances and explicit
/// enumeration of every shortest path. Exponential, so only for tiny graphs.
inline std::vector<double> oracle_graph_features(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  constexpr int kInf = 1 << 20;
  std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
  for (auto [s, t] : edges) adj[s][t] = 1;
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) {
    dist[i][i] = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && adj[i][j]) dist[i][j] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
    }
  }

  std::vector<double> betweenness(n, 0.0);
  std::vector<double> lengths;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (s == t || dist[s][t] >= kInf) continue;
      lengths.push_back(dist[s][t]);
      // All walks of exactly dist[s][t] steps ending at t are shortest paths.
      std::vector<std::vector<int>> paths;
      std::vector<int> cur{static_cast<int>(s)};
      std::function<void()> walk = [&] {
        const int v = cur.back();
        if (static_cast<int>(cur.size()) - 1 == dist[s][t]) {
          if (v == static_cast<int>(t)) paths.push_back(cur);
          return;
        }
        for (std::size_t w = 0; w < n; ++w) {
          if (adj[v][w] && static_cast<int>(w) != v) {
            cur.push_back(static_cast<int>(w));
            walk();
            cur.pop_back();
          }
        }
      };
      walk();
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t) continue;
        double through = 0;
        for (const auto& p : paths) through += std::count(p.begin(), p.end(), static_cast<int>(v));
        betweenness[v] += through / static_cast<double>(paths.size());
      }
    }
  }

  std::vector<double> outdeg(n, 0.0), closeness(n, 0.0);
  std::size_t non_loop = 0;
  for (auto [s, t] : edges) {
    outdeg[s] += 1;
    non_loop += s != t;
  }
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0;
    double reach = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t != s && dist[s][t] < kInf) {
        total += dist[s][t];
        reach += 1;
      }
    }
    closeness[s] = total > 0 ? reach / total : 0.0;
  }

  auto stats = [](std::vector<double> v) {
    std::vector<double> out(5, 0.0);
    if (v.empty()) return out;
    std::sort(v.begin(), v.end());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const std::size_t m = v.size();
    out[0] = v.front();
    out[1] = v.back();
    out[2] = mean;
    out[3] = m % 2 == 1 ? v[m / 2] : (v[m / 2 - 1] + v[m / 2]) / 2.0;
    out[4] = std::sqrt(var);
    return out;
  };

  std::vector<double> f{static_cast<double>(n), static_cast<double>(edges.size()),
                        n > 1 ? static_cast<double>(non_loop) / static_cast<double>(n * (n - 1)) : 0.0};
  for (const auto* sample : {&outdeg, &closeness, &betweenness, &lengths}) {
    auto s = stats(*sample);
    f.insert(f.end(), s.begin(), s.end());
  }
  return f;
}

inline ControlFlowGraph make_graph(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<BasicBlock> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back({static_cast<std::uint32_t>(i), 0x1000 + 16 * i, 16});
  std::vector<Edge> e;
  for (auto [s, t] : edges) e.emplace_back(s, t);
  return ControlFlowGraph(std::move(nodes), std::move(e), 0);
}

}  // namespace brt::testing
