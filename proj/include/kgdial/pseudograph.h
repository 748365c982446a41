// Copyright 2026 The kgdial Authors.
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

#ifndef KGDIAL_PSEUDOGRAPH_H_
#define KGDIAL_PSEUDOGRAPH_H_

#include <cstddef>
#include <ostream>
#include <vector>

#include "kgdial/compute.h"
#include "kgdial/kb.h"
#include "kgdial/vocab.h"

namespace kgdial {

// Level 0: one flattened triple, its W token ids, and their embedding rows
// (W x E, gathered from the shared table so gradients reach the table).
struct PseudoTripleNode {
  Triple source;
  std::vector<TokenId> token_ids;
  compute::Tensor embedding;
};

// Level 1: stands in for one mention's subgraph. The state is written by the
// first aggregation layer.
struct SubgraphNode {
  std::size_t subgraph_index = 0;
  std::string mention;
  std::vector<PseudoTripleNode> children;
  compute::Tensor state;

  bool has_state() const { return state.defined(); }
};

// Level 2: the whole-graph node. The state is written by the second layer.
struct PseudoGraphRoot {
  std::vector<SubgraphNode> children;
  compute::Tensor state;
};

class PseudoGraph {
 public:
  PseudoGraph() = default;
  explicit PseudoGraph(PseudoGraphRoot root) : root_(std::move(root)) {}

  PseudoGraphRoot &root() { return root_; }
  const PseudoGraphRoot &root() const { return root_; }
  std::vector<SubgraphNode> &level1() { return root_.children; }
  const std::vector<SubgraphNode> &level1() const { return root_.children; }
  // Every triple node, subgraph by subgraph.
  std::vector<const PseudoTripleNode *> level0() const;

  bool empty() const { return root_.children.empty(); }
  std::size_t triple_count() const;

  // Clears layer states so the graph can be aggregated again.
  void reset_states();

 private:
  PseudoGraphRoot root_;
};

// flatten_triple mapped to ids and fitted to exactly W slots: right-padded
// with PAD, or truncated by dropping trailing relation pieces (head and tail
// always survive). Throws Error(kInvalidArgument) when W < 4.
std::vector<TokenId> fit_triple_tokens(const Triple &t, const Vocabulary &v,
                                       std::size_t width);

// When table is undefined the node carries ids only (used for debug dumps).
PseudoTripleNode embed_triple_node(const Triple &t, const Vocabulary &v,
                                   const compute::Tensor &table, std::size_t width);

PseudoGraph build_pseudo_graph(const std::vector<Subgraph> &subgraphs,
                               const Vocabulary &v, const compute::Tensor &table,
                               std::size_t width);

// One node per line: level, node id, parent id, source, token ids.
void dump_graph(std::ostream &out, const PseudoGraph &graph);

}  // namespace kgdial

#endif  // KGDIAL_PSEUDOGRAPH_H_
