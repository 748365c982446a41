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

#include "kgdial/pseudograph.h"

#include "kgdial/errors.h"

namespace kgdial {

std::vector<const PseudoTripleNode *> PseudoGraph::level0() const {
  std::vector<const PseudoTripleNode *> out;
  for (const SubgraphNode &sg : root_.children) {
    for (const PseudoTripleNode &node : sg.children) out.push_back(&node);
  }
  return out;
}

std::size_t PseudoGraph::triple_count() const {
  std::size_t n = 0;
  for (const SubgraphNode &sg : root_.children) n += sg.children.size();
  return n;
}

void PseudoGraph::reset_states() {
  for (SubgraphNode &sg : root_.children) sg.state = compute::Tensor();
  root_.state = compute::Tensor();
}

std::vector<TokenId> fit_triple_tokens(const Triple &t, const Vocabulary &v,
                                       std::size_t width) {
  if (width < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "triple width must be at least 4, got " + std::to_string(width));
  }
  std::vector<std::string> pieces = flatten_triple(t);
  if (pieces.size() > width) {
    // Keep head, the leading width-2 relation pieces, and tail.
    std::vector<std::string> kept(pieces.begin(), pieces.begin() + (width - 1));
    kept.push_back(pieces.back());
    pieces = std::move(kept);
  }
  std::vector<TokenId> ids;
  ids.reserve(width);
  for (const std::string &p : pieces) ids.push_back(v.id(p));
  ids.resize(width, Vocabulary::kPad);
  return ids;
}

PseudoTripleNode embed_triple_node(const Triple &t, const Vocabulary &v,
                                   const compute::Tensor &table, std::size_t width) {
  PseudoTripleNode node{t, fit_triple_tokens(t, v, width), {}};
  if (table.defined()) node.embedding = compute::gather_rows(table, node.token_ids);
  return node;
}

PseudoGraph build_pseudo_graph(const std::vector<Subgraph> &subgraphs,
                               const Vocabulary &v, const compute::Tensor &table,
                               std::size_t width) {
  PseudoGraphRoot root;
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    SubgraphNode node;
    node.subgraph_index = i;
    node.mention = subgraphs[i].mention.surface;
    for (const Triple &t : subgraphs[i].triples) {
      node.children.push_back(embed_triple_node(t, v, table, width));
    }
    root.children.push_back(std::move(node));
  }
  return PseudoGraph(std::move(root));
}

void dump_graph(std::ostream &out, const PseudoGraph &graph) {
  out << "2\troot\t-\t-\t-\n";
  for (const SubgraphNode &sg : graph.level1()) {
    const std::string id = "g" + std::to_string(sg.subgraph_index);
    out << "1\t" << id << "\troot\tmention=" << sg.mention << "\t-\n";
    for (std::size_t j = 0; j < sg.children.size(); ++j) {
      const PseudoTripleNode &node = sg.children[j];
      out << "0\t" << id << ".t" << j << '\t' << id << '\t' << node.source.head << ' '
          << node.source.relation << ' ' << node.source.tail << '\t';
      for (std::size_t k = 0; k < node.token_ids.size(); ++k) {
        if (k > 0) out << ' ';
        out << node.token_ids[k];
      }
      out << '\n';
    }
  }
}

}  // namespace kgdial
