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
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "brt/common.hpp"

namespace brt {

struct BasicBlock {
  std::uint32_t id = 0;
  std::uint64_t start = 0;
  std::uint64_t size = 0;

  bool operator==(const BasicBlock&) const = default;
};

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Directed graph of basic blocks. Ids are dense 0..|V|-1 and nodes() is
/// indexed by id. Validated on construction.
class ControlFlowGraph {
 public:
  /// Throws DuplicateNodeId, DanglingEdge or SchemaError.
  ControlFlowGraph(std::vector<BasicBlock> nodes, std::vector<Edge> edges, std::uint32_t entry);

  const std::vector<BasicBlock>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::uint32_t entry() const noexcept { return entry_; }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  /// Successor lists indexed by node id.
  std::vector<std::vector<std::uint32_t>> successors() const;

  std::string to_json() const;

 private:
  std::vector<BasicBlock> nodes_;
  std::vector<Edge> edges_;
  std::uint32_t entry_ = 0;
};

/// Parses the exported CFG document
/// {"entry":int,"nodes":[{"id":int,"start":int,"size":int}...],"edges":[[int,int]...]}.
ControlFlowGraph load_cfg_json(const std::string& text);

/// d x d binary matrix, rows/cols ordered by block start address.
struct AdjacencyMatrix {
  std::size_t dim = 0;
  std::vector<std::uint8_t> cells;  // row-major, dim*dim
  bool truncated = false;
  std::size_t mapped = 0;  // min(|V|, d)

  std::uint8_t at(std::size_t i, std::size_t j) const { return cells[i * dim + j]; }
  std::uint8_t& at(std::size_t i, std::size_t j) { return cells[i * dim + j]; }
};

AdjacencyMatrix adjacency_matrix(const ControlFlowGraph& g, std::size_t d);

/// Builds a graph from a (possibly perturbed) matrix. Nodes are the first
/// `mapped` indices plus any index touched by an edge; a cell counts as an
/// edge when it is >= 0.5.
ControlFlowGraph graph_from_matrix(const std::vector<double>& cells, std::size_t dim, std::size_t mapped);

inline constexpr std::size_t kGraphFeatureDim = 23;
using GraphFeatures = std::array<double, kGraphFeatureDim>;

/// |V|, |E|, density, then {min, max, mean, median, stdev} of out-degree,
/// closeness, betweenness and finite shortest-path length.
GraphFeatures graph_features(const ControlFlowGraph& g);

/// min, max, mean, median, population stdev; all zero for an empty sample.
std::array<double, 5> summary_stats(std::vector<double> values);

}  // namespace brt
