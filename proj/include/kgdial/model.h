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

// Knowledge-grounded encoder-decoder. The post is encoded with a context
// token in front; retrieved triples become pseudo nodes whose embeddings are
// averaged (static aggregation) and attended in two layers, triples into
// subgraph nodes and subgraph nodes into a root, under a query built from
// the context vector and the max-pooled static feature. The decoder
// cross-attends the row stack [root; static mean; context; post tokens].

#ifndef KGDIAL_MODEL_H_
#define KGDIAL_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgdial/compute.h"
#include "kgdial/kb.h"
#include "kgdial/pseudograph.h"
#include "kgdial/vocab.h"

namespace kgdial {

enum class Ablation { kFull, kNoDyAgg, kNoStAgg, kNoKg };

const char *ablation_name(Ablation a);
// Accepts full, no_dy_agg, no_st_agg, no_kg. Throws Error(kInvalidArgument).
Ablation parse_ablation(const std::string &name);

struct ModelConfig {
  std::size_t embed_dim = 64;
  // Slots per flattened triple.
  std::size_t triple_width = 6;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t heads = 4;
  std::size_t max_seq_len = 64;
  // Hidden width of the feed-forward sublayers; 0 means 4 * embed_dim.
  std::size_t ffn_dim = 0;
  Ablation ablation = Ablation::kFull;
  int precision = 64;
  double init_std = 0.02;
  RetrievalConfig retrieval;

  std::size_t ffn_width() const { return ffn_dim == 0 ? 4 * embed_dim : ffn_dim; }
  // Throws Error(kInvalidArgument) on a violated invariant.
  void validate() const;
};

// Named trainable tensors in a fixed registration order.
class Parameters {
 public:
  void add(std::string name, compute::Tensor tensor);
  const compute::Tensor &at(const std::string &name) const;
  compute::Tensor &at(const std::string &name);
  bool contains(const std::string &name) const { return index_.count(name) > 0; }

  const std::vector<compute::NamedTensor> &all() const { return list_; }
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<compute::NamedTensor> list_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncoderOutput {
  compute::Tensor h_cls;  // 1 x E
  compute::Tensor h_x;    // n x E
};

struct AggregationState {
  compute::Tensor eps;         // W x E
  compute::Tensor eps_pooled;  // 1 x E
  compute::Tensor q;           // 1 x E
  std::vector<std::vector<double>> layer1_weights;
  std::vector<double> layer2_weights;
  compute::Tensor root_state;  // W x E
};

// Element-wise mean of all triple-node embeddings. Throws Error(kEmptyGraph).
compute::Tensor static_aggregate(const std::vector<const PseudoTripleNode *> &level0);

// eps_pooled = column max of eps; q = [h_cls ; eps_pooled] . fc_w + fc_b.
// With zero_static the pooled feature is replaced by zeros before the FC.
std::pair<compute::Tensor, compute::Tensor> context_query(
    const compute::Tensor &h_cls, const compute::Tensor &eps,
    const compute::Tensor &fc_w, const compute::Tensor &fc_b, bool zero_static = false);

// First layer: beta_j = w_g . [vec(child_j) ; q], weights = softmax(beta),
// state = sum_j weights_j child_j. Writes node.state; returns (state,
// weights as a 1 x k tensor).
std::pair<compute::Tensor, compute::Tensor> aggregate_subgraph_layer(
    SubgraphNode &node, const compute::Tensor &q, const compute::Tensor &w_g);

// Second layer over the subgraph states. Throws
// Error(kLayerOrderViolation) if a child has no state yet.
std::pair<compute::Tensor, compute::Tensor> aggregate_root_layer(
    PseudoGraphRoot &root, const compute::Tensor &q, const compute::Tensor &w_root);

// Row stack [root_state; eps; h_cls; h_x] minus the blocks the ablation
// drops.
compute::Tensor assemble_encoder_memory(const AggregationState &agg,
                                        const EncoderOutput &enc, Ablation ablation);

struct StepOutput {
  compute::Tensor logits;  // 1 x |V|
  std::vector<double> probs;
};

class Model {
 public:
  // Fresh parameters drawn from a seeded normal.
  Model(ModelConfig cfg, std::size_t vocab_size, std::uint64_t seed);
  // Restores from existing tensors; validates names and shapes.
  Model(ModelConfig cfg, std::size_t vocab_size, Parameters params);

  const ModelConfig &config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_size_; }
  Parameters &params() { return params_; }
  const Parameters &params() const { return params_; }
  void set_ablation(Ablation a) { cfg_.ablation = a; }

  // Prepends the context token and runs the encoder stack. Throws
  // Error(kTooLong) when the post exceeds max_seq_len - 1 tokens.
  EncoderOutput encode_post(const TokenSeq &post) const;

  PseudoGraph build_graph(const std::vector<Subgraph> &subgraphs,
                          const Vocabulary &v) const;

  // Runs aggregation on graph as the ablation requires and assembles the
  // memory rows. An empty graph yields the text-only layout.
  compute::Tensor encoder_memory(const TokenSeq &post, PseudoGraph &graph,
                                 AggregationState *state = nullptr) const;
  compute::Tensor encoder_memory(const EncoderOutput &enc, PseudoGraph &graph,
                                 AggregationState *state = nullptr) const;

  // Decoder hidden states (T x E) for a prefix, causal over the prefix.
  compute::Tensor decode_hidden(const compute::Tensor &memory,
                                std::span<const TokenId> prefix) const;
  compute::Tensor project(const compute::Tensor &hidden) const;

  // Next-token distribution after prefix. Throws Error(kTooLong).
  StepOutput decode_step(const compute::Tensor &memory, const TokenSeq &prefix) const;

 private:
  compute::Tensor attention(const compute::Tensor &xq, const compute::Tensor &xkv,
                            const std::string &prefix, bool causal) const;
  compute::Tensor feed_forward(const compute::Tensor &x, const std::string &prefix) const;
  compute::Tensor norm(const compute::Tensor &x, const std::string &prefix) const;
  void init_parameters(std::uint64_t seed);

  ModelConfig cfg_;
  std::size_t vocab_size_;
  Parameters params_;
};

// Names of the parameters the model expects, in registration order, with
// their shapes.
std::vector<std::pair<std::string, compute::Shape>> parameter_layout(
    const ModelConfig &cfg, std::size_t vocab_size);

struct Example {
  TokenSeq post;      // ends with EOS
  TokenSeq response;  // BOS ... EOS
  PseudoGraph graph;
};

// Mean of -log p over the non-PAD targets. Rows of logits align with
// targets.
compute::Tensor token_cross_entropy(const compute::Tensor &logits,
                                    std::span<const TokenId> targets);

// Teacher-forced cross-entropy averaged over every non-PAD response target
// in the batch. Throws Error(kEmptyBatch).
compute::Tensor sequence_loss(std::vector<Example> &batch, const Model &model);

struct Decoding {
  enum class Kind { kGreedy, kBeam } kind = Kind::kGreedy;
  std::size_t beam_size = 4;
};

// Post tokens for the encoder: normalized text, encoded, EOS appended.
TokenSeq encode_post_text(const std::string &post, const Vocabulary &v);
// Response tokens wrapped in BOS/EOS.
TokenSeq encode_response_text(const std::string &response, const Vocabulary &v);

struct Generation {
  std::string text;
  TokenSeq ids;
  std::vector<Subgraph> subgraphs;
};

// Retrieval, graph construction, encoding, aggregation, then greedy or beam
// decoding until EOS or max_new tokens. kb may be null only in no_kg mode;
// no_kg never touches it.
Generation generate(const std::string &post, const KnowledgeBase *kb,
                    const Vocabulary &v, const Model &model, const Decoding &decoding,
                    std::size_t max_new);

std::string generate_response(const std::string &post, const KnowledgeBase *kb,
                              const Vocabulary &v, const Model &model,
                              const Decoding &decoding, std::size_t max_new);

}  // namespace kgdial

#endif  // KGDIAL_MODEL_H_
