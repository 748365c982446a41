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

#include "kgdial/model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kgdial/errors.h"
#include "kgdial/random.h"
#include "kgdial/text.h"

namespace kgdial {

using compute::Shape;
using compute::Tensor;

namespace {

[[noreturn]] void invalid(const std::string &what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

[[noreturn]] void mismatch(const std::string &what) {
  throw Error(ErrorCode::kShapeMismatch, what);
}

std::string layer_name(const char *stack, std::size_t layer, const char *part) {
  return std::string(stack) + "." + std::to_string(layer) + "." + part;
}

// Tokens the decoder may never emit.
bool is_forbidden_output(TokenId id) {
  return id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kCtx;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double x : logits) z += std::exp(x - mx);
  const double log_z = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

}  // namespace

const char *ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoDyAgg: return "no_dy_agg";
    case Ablation::kNoStAgg: return "no_st_agg";
    case Ablation::kNoKg: return "no_kg";
  }
  return "full";
}

Ablation parse_ablation(const std::string &name) {
  if (name == "full") return Ablation::kFull;
  if (name == "no_dy_agg") return Ablation::kNoDyAgg;
  if (name == "no_st_agg") return Ablation::kNoStAgg;
  if (name == "no_kg") return Ablation::kNoKg;
  invalid("unknown ablation '" + name + "'");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
    invalid("embed_dim must be a positive multiple of heads");
  }
  if (max_seq_len < 2) invalid("max_seq_len must be at least 2");
  if (triple_width < 4) invalid("triple_width must be at least 4");
  if (precision != 32 && precision != 64) invalid("precision must be 32 or 64");
  if (retrieval.max_subgraphs == 0 || retrieval.max_triples_per_subgraph == 0) {
    invalid("retrieval caps must be positive");
  }
}

void Parameters::add(std::string name, Tensor tensor) {
  if (index_.count(name) > 0) invalid("duplicate parameter " + name);
  tensor.set_requires_grad(true);
  index_.emplace(name, list_.size());
  list_.push_back({std::move(name), std::move(tensor)});
}

const Tensor &Parameters::at(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) invalid("no parameter named " + name);
  return list_[it->second].tensor;
}

Tensor &Parameters::at(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) invalid("no parameter named " + name);
  return list_[it->second].tensor;
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto &p : list_) n += p.tensor.numel();
  return n;
}

void Parameters::zero_grad() {
  for (auto &p : list_) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig &cfg,
                                                            std::size_t vocab_size) {
  const std::size_t e = cfg.embed_dim, f = cfg.ffn_width(), w = cfg.triple_width;
  std::vector<std::pair<std::string, Shape>> out;
  auto norm = [&](const std::string &name) {
    out.push_back({name + ".g", {1, e}});
    out.push_back({name + ".b", {1, e}});
  };
  auto attn = [&](const std::string &name) {
    for (const char *m : {".wq", ".wk", ".wv", ".wo"}) out.push_back({name + m, {e, e}});
  };
  auto ffn = [&](const std::string &name) {
    out.push_back({name + ".w1", {e, f}});
    out.push_back({name + ".b1", {1, f}});
    out.push_back({name + ".w2", {f, e}});
    out.push_back({name + ".b2", {1, e}});
  };
  out.push_back({"embedding", {vocab_size, e}});
  out.push_back({"enc.pos", {cfg.max_seq_len, e}});
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    norm(layer_name("enc", l, "ln1"));
    attn(layer_name("enc", l, "attn"));
    norm(layer_name("enc", l, "ln2"));
    ffn(layer_name("enc", l, "ffn"));
  }
  norm("enc.ln_f");
  out.push_back({"dec.pos", {cfg.max_seq_len, e}});
  norm("dec.mem_ln");
  for (std::size_t l = 0; l < cfg.dec_layers; ++l) {
    norm(layer_name("dec", l, "ln1"));
    attn(layer_name("dec", l, "self"));
    norm(layer_name("dec", l, "ln2"));
    attn(layer_name("dec", l, "cross"));
    norm(layer_name("dec", l, "ln3"));
    ffn(layer_name("dec", l, "ffn"));
  }
  norm("dec.ln_f");
  out.push_back({"agg.w_g", {1, (w + 1) * e}});
  out.push_back({"agg.w_G", {1, (w + 1) * e}});
  out.push_back({"agg.fc.w", {2 * e, e}});
  out.push_back({"agg.fc.b", {1, e}});
  out.push_back({"lm_head.w_res", {e, vocab_size}});
  return out;
}

Model::Model(ModelConfig cfg, std::size_t vocab_size, std::uint64_t seed)
    : cfg_(std::move(cfg)), vocab_size_(vocab_size) {
  cfg_.validate();
  if (vocab_size < Vocabulary::kNumSpecials) invalid("vocabulary too small");
  init_parameters(seed);
}

Model::Model(ModelConfig cfg, std::size_t vocab_size, Parameters params)
    : cfg_(std::move(cfg)), vocab_size_(vocab_size), params_(std::move(params)) {
  cfg_.validate();
  auto layout = parameter_layout(cfg_, vocab_size_);
  if (layout.size() != params_.all().size()) mismatch("parameter count differs from layout");
  for (const auto &[name, shape] : layout) {
    if (!params_.contains(name)) invalid("missing parameter " + name);
    if (params_.at(name).shape() != shape) {
      mismatch(name + " has shape " + compute::shape_string(params_.at(name).shape()) +
               ", expected " + compute::shape_string(shape));
    }
  }
}

void Model::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto &[name, shape] : parameter_layout(cfg_, vocab_size_)) {
    std::vector<double> values(shape[0] * shape[1]);
    const bool is_gain = name.ends_with(".g");
    const bool is_bias = name.ends_with(".b") || name.ends_with(".b1") ||
                         name.ends_with(".b2") || name == "agg.fc.b";
    for (double &x : values) {
      if (is_gain) {
        x = 1.0;
      } else if (is_bias) {
        x = 0.0;
      } else {
        x = compute::round_to_precision(cfg_.init_std * rng.normal());
      }
    }
    params_.add(name, Tensor::from(shape[0], shape[1], std::move(values)));
  }
}

Tensor Model::norm(const Tensor &x, const std::string &prefix) const {
  return compute::layer_norm(x, params_.at(prefix + ".g"), params_.at(prefix + ".b"));
}

Tensor Model::attention(const Tensor &xq, const Tensor &xkv, const std::string &prefix,
                        bool causal) const {
  const std::size_t e = cfg_.embed_dim, d = e / cfg_.heads;
  Tensor q = compute::matmul(xq, params_.at(prefix + ".wq"));
  Tensor k = compute::matmul(xkv, params_.at(prefix + ".wk"));
  Tensor v = compute::matmul(xkv, params_.at(prefix + ".wv"));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Tensor> heads;
  heads.reserve(cfg_.heads);
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    Tensor qh = cfg_.heads == 1 ? q : compute::slice_cols(q, h * d, (h + 1) * d);
    Tensor kh = cfg_.heads == 1 ? k : compute::slice_cols(k, h * d, (h + 1) * d);
    Tensor vh = cfg_.heads == 1 ? v : compute::slice_cols(v, h * d, (h + 1) * d);
    Tensor scores = compute::scale(compute::matmul_bt(qh, kh), inv_sqrt_d);
    heads.push_back(compute::matmul(compute::softmax_rows(scores, causal), vh));
  }
  Tensor merged = cfg_.heads == 1 ? heads[0] : compute::concat(heads, 1);
  return compute::matmul(merged, params_.at(prefix + ".wo"));
}

Tensor Model::feed_forward(const Tensor &x, const std::string &prefix) const {
  Tensor h = compute::gelu(compute::add(compute::matmul(x, params_.at(prefix + ".w1")),
                                        params_.at(prefix + ".b1")));
  return compute::add(compute::matmul(h, params_.at(prefix + ".w2")),
                      params_.at(prefix + ".b2"));
}

EncoderOutput Model::encode_post(const TokenSeq &post) const {
  const std::size_t n = post.length();
  if (n == 0) invalid("empty post sequence");
  if (n > cfg_.max_seq_len - 1) {
    throw Error(ErrorCode::kTooLong, "post of " + std::to_string(n) +
                                         " tokens exceeds max_seq_len - 1 = " +
                                         std::to_string(cfg_.max_seq_len - 1));
  }
  std::vector<TokenId> ids;
  ids.reserve(n + 1);
  ids.push_back(Vocabulary::kCtx);
  ids.insert(ids.end(), post.ids.begin(), post.ids.end());
  Tensor x = compute::add(compute::gather_rows(params_.at("embedding"), ids),
                          compute::slice_rows(params_.at("enc.pos"), 0, n + 1));
  for (std::size_t l = 0; l < cfg_.enc_layers; ++l) {
    Tensor h = norm(x, layer_name("enc", l, "ln1"));
    x = compute::add(x, attention(h, h, layer_name("enc", l, "attn"), false));
    x = compute::add(x, feed_forward(norm(x, layer_name("enc", l, "ln2")),
                                     layer_name("enc", l, "ffn")));
  }
  x = norm(x, "enc.ln_f");
  return {compute::slice_rows(x, 0, 1), compute::slice_rows(x, 1, n + 1)};
}

PseudoGraph Model::build_graph(const std::vector<Subgraph> &subgraphs,
                               const Vocabulary &v) const {
  return build_pseudo_graph(subgraphs, v, params_.at("embedding"), cfg_.triple_width);
}

Tensor Model::encoder_memory(const TokenSeq &post, PseudoGraph &graph,
                             AggregationState *state) const {
  return encoder_memory(encode_post(post), graph, state);
}

Tensor Model::encoder_memory(const EncoderOutput &enc, PseudoGraph &graph,
                             AggregationState *state) const {
  Ablation ablation = cfg_.ablation;
  if (graph.empty()) ablation = Ablation::kNoKg;
  AggregationState agg;
  if (ablation != Ablation::kNoKg) {
    const bool use_static = ablation != Ablation::kNoStAgg;
    if (use_static) agg.eps = static_aggregate(graph.level0());
    if (ablation != Ablation::kNoDyAgg) {
      std::tie(agg.eps_pooled, agg.q) =
          context_query(enc.h_cls, agg.eps, params_.at("agg.fc.w"),
                        params_.at("agg.fc.b"), !use_static);
      graph.reset_states();
      for (SubgraphNode &sg : graph.level1()) {
        Tensor weights = aggregate_subgraph_layer(sg, agg.q, params_.at("agg.w_g")).second;
        agg.layer1_weights.emplace_back(weights.data().begin(), weights.data().end());
      }
      Tensor weights = aggregate_root_layer(graph.root(), agg.q, params_.at("agg.w_G")).second;
      agg.layer2_weights.assign(weights.data().begin(), weights.data().end());
      agg.root_state = graph.root().state;
    }
  }
  Tensor memory = assemble_encoder_memory(agg, enc, ablation);
  if (state != nullptr) *state = std::move(agg);
  return memory;
}

Tensor Model::decode_hidden(const Tensor &memory, std::span<const TokenId> prefix) const {
  const std::size_t t = prefix.size();
  if (t == 0) invalid("empty decoder prefix");
  if (t > cfg_.max_seq_len) {
    throw Error(ErrorCode::kTooLong, "decoder prefix of " + std::to_string(t) +
                                         " tokens exceeds max_seq_len");
  }
  if (!memory.defined() || memory.rows() == 0) invalid("empty encoder memory");
  Tensor x = compute::add(compute::gather_rows(params_.at("embedding"), prefix),
                          compute::slice_rows(params_.at("dec.pos"), 0, t));
  Tensor mem = norm(memory, "dec.mem_ln");
  for (std::size_t l = 0; l < cfg_.dec_layers; ++l) {
    Tensor h = norm(x, layer_name("dec", l, "ln1"));
    x = compute::add(x, attention(h, h, layer_name("dec", l, "self"), true));
    x = compute::add(x, attention(norm(x, layer_name("dec", l, "ln2")), mem,
                                  layer_name("dec", l, "cross"), false));
    x = compute::add(x, feed_forward(norm(x, layer_name("dec", l, "ln3")),
                                     layer_name("dec", l, "ffn")));
  }
  return norm(x, "dec.ln_f");
}

Tensor Model::project(const Tensor &hidden) const {
  return compute::matmul(hidden, params_.at("lm_head.w_res"));
}

StepOutput Model::decode_step(const Tensor &memory, const TokenSeq &prefix) const {
  Tensor hidden = decode_hidden(memory, prefix.ids);
  Tensor logits = project(compute::slice_rows(hidden, hidden.rows() - 1, hidden.rows()));
  Tensor probs = compute::softmax_rows(logits);
  return {logits, std::vector<double>(probs.data().begin(), probs.data().end())};
}

Tensor static_aggregate(const std::vector<const PseudoTripleNode *> &level0) {
  if (level0.empty()) {
    throw Error(ErrorCode::kEmptyGraph, "static aggregation needs at least one triple");
  }
  std::vector<Tensor> parts;
  parts.reserve(level0.size());
  for (const PseudoTripleNode *node : level0) parts.push_back(node->embedding);
  return compute::mean(parts);
}

std::pair<Tensor, Tensor> context_query(const Tensor &h_cls, const Tensor &eps,
                                        const Tensor &fc_w, const Tensor &fc_b,
                                        bool zero_static) {
  const std::size_t e = h_cls.cols();
  if (h_cls.rows() != 1) mismatch("h_cls must be 1 x E");
  Tensor pooled;
  if (zero_static) {
    pooled = Tensor::zeros(1, e);
  } else {
    if (!eps.defined() || eps.cols() != e) mismatch("eps width differs from h_cls");
    pooled = compute::max_pool_rows(eps);
  }
  if (fc_w.rows() != 2 * e || fc_w.cols() != e) {
    mismatch("fc weight must be 2E x E, got " + compute::shape_string(fc_w.shape()));
  }
  Tensor q = compute::add(compute::matmul(compute::concat({h_cls, pooled}, 1), fc_w), fc_b);
  return {pooled, q};
}

namespace {

// Shared by both layers: score each child with w . [vec(child) ; q], softmax
// the scores, and return the weighted sum of children.
std::pair<Tensor, Tensor> attend_children(const std::vector<Tensor> &children,
                                          const Tensor &q, const Tensor &w) {
  const std::size_t rows = children[0].rows(), cols = children[0].cols();
  const std::size_t k = children.size();
  if (q.rows() != 1 || q.cols() != cols) mismatch("query must be 1 x E");
  if (w.rows() != 1 || w.cols() != (rows + 1) * cols) {
    mismatch("score weight must be 1 x (W+1)E, got " + compute::shape_string(w.shape()));
  }
  std::vector<Tensor> flat;
  flat.reserve(k);
  for (const Tensor &c : children) {
    if (c.rows() != rows || c.cols() != cols) mismatch("children differ in shape");
    flat.push_back(compute::reshape(c, 1, rows * cols));
  }
  Tensor stacked = k == 1 ? flat[0] : compute::concat(flat, 0);  // k x WE
  std::vector<Tensor> q_rows(k, q);
  Tensor queries = k == 1 ? q : compute::concat(q_rows, 0);  // k x E
  Tensor features = compute::concat({stacked, queries}, 1);  // k x (W+1)E
  Tensor scores = compute::matmul_bt(w, features);            // 1 x k
  Tensor weights = compute::softmax_rows(scores);
  Tensor state = compute::reshape(compute::matmul(weights, stacked), rows, cols);
  return {state, weights};
}

}  // namespace

std::pair<Tensor, Tensor> aggregate_subgraph_layer(SubgraphNode &node, const Tensor &q,
                                                   const Tensor &w_g) {
  if (node.children.empty()) {
    throw Error(ErrorCode::kEmptyGraph, "subgraph node without triples");
  }
  std::vector<Tensor> children;
  for (const PseudoTripleNode &c : node.children) children.push_back(c.embedding);
  auto result = attend_children(children, q, w_g);
  node.state = result.first;
  return result;
}

std::pair<Tensor, Tensor> aggregate_root_layer(PseudoGraphRoot &root, const Tensor &q,
                                               const Tensor &w_root) {
  if (root.children.empty()) throw Error(ErrorCode::kEmptyGraph, "root without subgraphs");
  std::vector<Tensor> children;
  for (const SubgraphNode &sg : root.children) {
    if (!sg.has_state()) {
      throw Error(ErrorCode::kLayerOrderViolation,
                  "subgraph " + std::to_string(sg.subgraph_index) +
                      " has no state; run the first layer before the root layer");
    }
    children.push_back(sg.state);
  }
  auto result = attend_children(children, q, w_root);
  root.state = result.first;
  return result;
}

Tensor assemble_encoder_memory(const AggregationState &agg, const EncoderOutput &enc,
                               Ablation ablation) {
  if (!enc.h_cls.defined() || !enc.h_x.defined()) mismatch("encoder output is unset");
  const std::size_t e = enc.h_cls.cols();
  std::vector<Tensor> blocks;
  auto push = [&](const Tensor &t, const char *what) {
    if (!t.defined()) mismatch(std::string(what) + " required by the ablation is unset");
    if (t.cols() != e) {
      mismatch(std::string(what) + " width " + std::to_string(t.cols()) +
               " differs from E = " + std::to_string(e));
    }
    blocks.push_back(t);
  };
  if (ablation == Ablation::kFull || ablation == Ablation::kNoStAgg) {
    push(agg.root_state, "root state");
  }
  if (ablation == Ablation::kFull || ablation == Ablation::kNoDyAgg) {
    push(agg.eps, "static mean");
  }
  push(enc.h_cls, "h_cls");
  push(enc.h_x, "h_x");
  return compute::concat(blocks, 0);
}

Tensor token_cross_entropy(const Tensor &logits, std::span<const TokenId> targets) {
  std::vector<std::size_t> t(targets.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == Vocabulary::kPad) {
      t[i] = compute::kIgnoreTarget;
    } else {
      t[i] = targets[i];
      ++count;
    }
  }
  Tensor total = compute::cross_entropy_sum(logits, t);
  return count == 0 ? total : compute::scale(total, 1.0 / static_cast<double>(count));
}

Tensor sequence_loss(std::vector<Example> &batch, const Model &model) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "sequence_loss on an empty batch");
  std::vector<Tensor> sums;
  std::size_t count = 0;
  for (Example &ex : batch) {
    const std::size_t m = ex.response.length();
    if (m < 2) continue;
    Tensor memory = model.encoder_memory(ex.post, ex.graph);
    std::span<const TokenId> ids(ex.response.ids);
    Tensor logits = model.project(model.decode_hidden(memory, ids.first(m - 1)));
    std::vector<std::size_t> targets(m - 1);
    for (std::size_t i = 1; i < m; ++i) {
      if (ids[i] == Vocabulary::kPad) {
        targets[i - 1] = compute::kIgnoreTarget;
      } else {
        targets[i - 1] = ids[i];
        ++count;
      }
    }
    sums.push_back(compute::cross_entropy_sum(logits, targets));
  }
  if (count == 0) throw Error(ErrorCode::kEmptyBatch, "batch has no response targets");
  Tensor total = sums.size() == 1 ? sums[0] : compute::sum(compute::concat(sums, 0));
  return compute::scale(total, 1.0 / static_cast<double>(count));
}

TokenSeq encode_post_text(const std::string &post, const Vocabulary &v) {
  TokenSeq seq = encode_text(normalize_text(post), v, false);
  seq.ids.push_back(Vocabulary::kEos);
  return seq;
}

TokenSeq encode_response_text(const std::string &response, const Vocabulary &v) {
  return encode_text(normalize_text(response), v, true);
}

namespace {

struct Hypothesis {
  std::vector<TokenId> ids;  // starts with BOS
  double log_prob = 0.0;
  bool done = false;
};

// Best allowed tokens by log-probability, ties to the lower id.
std::vector<std::pair<TokenId, double>> top_tokens(const std::vector<double> &log_probs,
                                                   std::size_t count) {
  std::vector<std::pair<TokenId, double>> all;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    if (!is_forbidden_output(static_cast<TokenId>(i))) {
      all.emplace_back(static_cast<TokenId>(i), log_probs[i]);
    }
  }
  count = std::min(count, all.size());
  std::partial_sort(all.begin(), all.begin() + count, all.end(),
                    [](const auto &a, const auto &b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  all.resize(count);
  return all;
}

std::vector<TokenId> decode_greedy(const Model &model, const Tensor &memory,
                                   std::size_t max_new) {
  TokenSeq prefix{{Vocabulary::kBos}};
  std::vector<TokenId> out;
  while (out.size() < max_new && prefix.length() < model.config().max_seq_len) {
    StepOutput step = model.decode_step(memory, prefix);
    TokenId best = top_tokens(log_softmax(step.logits.data()), 1).front().first;
    if (best == Vocabulary::kEos) break;
    out.push_back(best);
    prefix.ids.push_back(best);
  }
  return out;
}

std::vector<TokenId> decode_beam(const Model &model, const Tensor &memory,
                                 std::size_t beam_size, std::size_t max_new) {
  beam_size = std::max<std::size_t>(beam_size, 1);
  std::vector<Hypothesis> beams{{{Vocabulary::kBos}, 0.0, false}};
  for (std::size_t step = 0; step < max_new; ++step) {
    if (std::all_of(beams.begin(), beams.end(), [](const Hypothesis &h) { return h.done; })) {
      break;
    }
    std::vector<Hypothesis> candidates;
    for (Hypothesis &h : beams) {
      if (!h.done && h.ids.size() >= model.config().max_seq_len) h.done = true;
      if (h.done) {
        candidates.push_back(h);
        continue;
      }
      StepOutput out = model.decode_step(memory, TokenSeq{h.ids});
      for (auto [token, lp] : top_tokens(log_softmax(out.logits.data()), beam_size)) {
        Hypothesis next = h;
        next.ids.push_back(token);
        next.log_prob += lp;
        next.done = token == Vocabulary::kEos;
        candidates.push_back(std::move(next));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Hypothesis &a, const Hypothesis &b) {
                       if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                       return a.ids < b.ids;
                     });
    if (candidates.size() > beam_size) candidates.resize(beam_size);
    beams = std::move(candidates);
  }
  // Length-normalized selection over generated tokens (EOS included).
  const Hypothesis *best = &beams.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (const Hypothesis &h : beams) {
    const double len = static_cast<double>(std::max<std::size_t>(h.ids.size() - 1, 1));
    const double score = h.log_prob / len;
    if (score > best_score) {
      best_score = score;
      best = &h;
    }
  }
  std::vector<TokenId> out(best->ids.begin() + 1, best->ids.end());
  if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
  return out;
}

}  // namespace

Generation generate(const std::string &post, const KnowledgeBase *kb, const Vocabulary &v,
                    const Model &model, const Decoding &decoding, std::size_t max_new) {
  Generation gen;
  const bool use_kg = model.config().ablation != Ablation::kNoKg;
  if (use_kg) {
    if (kb == nullptr) invalid("a knowledge base is required unless the ablation is no_kg");
    gen.subgraphs = retrieve(post, *kb, model.config().retrieval);
  }
  compute::NoGradGuard no_grad;
  TokenSeq post_ids = encode_post_text(post, v);
  PseudoGraph graph = model.build_graph(gen.subgraphs, v);
  Tensor memory = model.encoder_memory(post_ids, graph);
  if (max_new == 0) return gen;
  gen.ids.ids = decoding.kind == Decoding::Kind::kBeam
                    ? decode_beam(model, memory, decoding.beam_size, max_new)
                    : decode_greedy(model, memory, max_new);
  gen.text = decode_ids(gen.ids, v);
  return gen;
}

std::string generate_response(const std::string &post, const KnowledgeBase *kb,
                              const Vocabulary &v, const Model &model,
                              const Decoding &decoding, std::size_t max_new) {
  return generate(post, kb, v, model, decoding, max_new).text;
}

}  // namespace kgdial
