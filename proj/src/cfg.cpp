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

#include "brt/cfg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include <json.hpp>

namespace brt {

ControlFlowGraph::ControlFlowGraph(std::vector<BasicBlock> nodes, std::vector<Edge> edges, std::uint32_t entry)
    : edges_(std::move(edges)), entry_(entry) {
  const std::size_t n = nodes.size();
  if (n == 0) throw Error(ErrorCode::SchemaError, "graph has no nodes");
  nodes_.resize(n);
  std::vector<bool> seen(n, false);
  for (const auto& b : nodes) {
    if (b.id >= n) throw Error(ErrorCode::SchemaError, "node id " + std::to_string(b.id) + " is not dense");
    if (seen[b.id]) throw Error(ErrorCode::DuplicateNodeId, "duplicate node id " + std::to_string(b.id));
    seen[b.id] = true;
    nodes_[b.id] = b;
  }
  if (entry_ >= n) throw Error(ErrorCode::SchemaError, "entry " + std::to_string(entry_) + " is not a node");
  std::set<Edge> unique;
  for (const auto& e : edges_) {
    if (e.first >= n || e.second >= n) {
      throw Error(ErrorCode::DanglingEdge,
                  "edge [" + std::to_string(e.first) + "," + std::to_string(e.second) + "] references a missing node");
    }
    if (!unique.insert(e).second) {
      throw Error(ErrorCode::SchemaError,
                  "duplicate edge [" + std::to_string(e.first) + "," + std::to_string(e.second) + "]");
    }
  }
}

std::vector<std::vector<std::uint32_t>> ControlFlowGraph::successors() const {
  std::vector<std::vector<std::uint32_t>> out(nodes_.size());
  for (const auto& [s, d] : edges_) out[s].push_back(d);
  return out;
}

std::string ControlFlowGraph::to_json() const {
  nlohmann::ordered_json doc;
  doc["entry"] = entry_;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& b : nodes_) doc["nodes"].push_back({{"id", b.id}, {"start", b.start}, {"size", b.size}});
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& [s, d] : edges_) doc["edges"].push_back({s, d});
  return doc.dump();
}

ControlFlowGraph load_cfg_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("CFG document is not JSON: ") + e.what());
  }
  auto require_uint = [](const nlohmann::json& obj, const char* key) -> std::uint64_t {
    if (!obj.is_object() || !obj.contains(key)) throw Error(ErrorCode::SchemaError, std::string("missing field '") + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw Error(ErrorCode::SchemaError, std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  };
  const auto entry = require_uint(doc, "entry");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw Error(ErrorCode::SchemaError, "missing array 'nodes'");
  if (!doc.contains("edges") || !doc["edges"].is_array()) throw Error(ErrorCode::SchemaError, "missing array 'edges'");
  std::vector<BasicBlock> nodes;
  for (const auto& n : doc["nodes"]) {
    nodes.push_back({static_cast<std::uint32_t>(require_uint(n, "id")), require_uint(n, "start"), require_uint(n, "size")});
  }
  std::vector<Edge> edges;
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        e[0].get<std::int64_t>() < 0 || e[1].get<std::int64_t>() < 0) {
      throw Error(ErrorCode::SchemaError, "edge must be a pair of non-negative integers");
    }
    edges.emplace_back(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>());
  }
  const std::size_t n = nodes.size();
  for (const auto& [s, d] : edges) {
    if (s >= n || d >= n) {
      throw Error(ErrorCode::DanglingEdge, "edge [" + std::to_string(s) + "," + std::to_string(d) + "] references a missing node");
    }
  }
  return ControlFlowGraph(std::move(nodes), std::move(edges), static_cast<std::uint32_t>(entry));
}

AdjacencyMatrix adjacency_matrix(const ControlFlowGraph& g, std::size_t d) {
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "adjacency dimension must be >= 1");
  std::vector<std::uint32_t> order(g.num_nodes());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& na = g.nodes()[a];
    const auto& nb = g.nodes()[b];
    return na.start != nb.start ? na.start < nb.start : a < b;
  });
  constexpr std::size_t kUnmapped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(g.num_nodes(), kUnmapped);
  AdjacencyMatrix m;
  m.dim = d;
  m.cells.assign(d * d, 0);
  m.mapped = std::min(g.num_nodes(), d);
  m.truncated = g.num_nodes() > d;
  for (std::size_t k = 0; k < m.mapped; ++k) index[order[k]] = k;
  for (const auto& [s, t] : g.edges()) {
    if (index[s] != kUnmapped && index[t] != kUnmapped) m.at(index[s], index[t]) = 1;
  }
  return m;
}

ControlFlowGraph graph_from_matrix(const std::vector<double>& cells, std::size_t dim, std::size_t mapped) {
  if (cells.size() != dim * dim) throw Error(ErrorCode::ShapeMismatch, "matrix cell count does not match dim*dim");
  std::vector<bool> active(dim, false);
  for (std::size_t i = 0; i < std::min(mapped, dim); ++i) active[i] = true;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (cells[i * dim + j] >= 0.5) active[i] = active[j] = true;
    }
  }
  std::vector<std::uint32_t> id(dim, 0);
  std::vector<BasicBlock> nodes;
  for (std::size_t i = 0; i < dim; ++i) {
    if (!active[i]) continue;
    id[i] = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back({id[i], i, 1});
  }
  if (nodes.empty()) nodes.push_back({0, 0, 1});
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (cells[i * dim + j] >= 0.5) edges.emplace_back(id[i], id[j]);
    }
  }
  return ControlFlowGraph(std::move(nodes), std::move(edges), 0);
}

std::array<double, 5> summary_stats(std::vector<double> values) {
  if (values.empty()) return {0, 0, 0, 0, 0};
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  const std::size_t mid = values.size() / 2;
  const double median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return {values.front(), values.back(), mean, median, std::sqrt(sq / n)};
}

GraphFeatures graph_features(const ControlFlowGraph& g) {
  const std::size_t n = g.num_nodes();
  const auto succ = g.successors();
  std::size_t non_loop_edges = 0;
  for (const auto& [s, d] : g.edges()) non_loop_edges += s != d;

  std::vector<double> out_degree(n), closeness(n, 0.0), betweenness(n, 0.0), path_lengths;
  for (std::size_t v = 0; v < n; ++v) out_degree[v] = static_cast<double>(succ[v].size());

  // Brandes: one BFS per source yields distances, path counts and the
  // dependency accumulation for unweighted directed graphs.
  std::vector<long> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<std::uint32_t>> pred(n);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : pred) p.clear();
    stack.clear();
    dist[s] = 0;
    sigma[s] = 1.0;
    std::deque<std::uint32_t> queue{s};
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      stack.push_back(v);
      for (auto w : succ[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    double total = 0.0;
    std::size_t reached = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t == s || dist[t] < 0) continue;
      ++reached;
      total += static_cast<double>(dist[t]);
      path_lengths.push_back(static_cast<double>(dist[t]));
    }
    closeness[s] = total > 0.0 ? static_cast<double>(reached) / total : 0.0;
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const auto w = *it;
      for (auto v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) betweenness[w] += delta[w];
    }
  }

  GraphFeatures f{};
  f[0] = static_cast<double>(n);
  f[1] = static_cast<double>(g.num_edges());
  f[2] = n > 1 ? static_cast<double>(non_loop_edges) / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
  std::size_t k = 3;
  for (auto* sample : {&out_degree, &closeness, &betweenness, &path_lengths}) {
    for (double v : summary_stats(*sample)) f[k++] = v;
  }
  return f;
}

}  // namespace brt
