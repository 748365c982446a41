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

// Corpus-level generation metrics over pre-tokenized sentences, and the
// count of retrieved entities a response actually uses.

#ifndef KGDIAL_METRICS_H_
#define KGDIAL_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgdial/kb.h"

namespace kgdial {

using Sentence = std::vector<std::string>;

// normalize_tokens on every line.
std::vector<Sentence> tokenize_sentences(const std::vector<std::string> &lines);

inline constexpr double kBleuEpsilon = 1e-9;

// Geometric mean of clipped n-gram precisions 1..n times the brevity
// penalty; a zero count is replaced by kBleuEpsilon. Throws
// Error(kEmptyCorpus) on no sentences and Error(kInvalidArgument) when the
// sides differ in length.
double bleu(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs,
            std::size_t n);

// Information-weighted co-occurrence summed over orders 1..n, with weights
// log2(count(w1..wk-1) / count(w1..wk)) taken from the references and the
// brevity factor exp(beta * ln^2(min(c/r, 1))), beta = ln 0.5 / ln^2(2/3).
double nist(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs,
            std::size_t n);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact-match unigram alignment with the most matches and, among those,
// the fewest chunks.
MeteorAlignment meteor_align(const Sentence &hyp, const Sentence &ref);

// Sentence score F * (1 - 0.5 (chunks/matches)^3) with F = 10PR / (R + 9P),
// averaged over the corpus.
double meteor_lite(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs);

// Distinct n-grams over total n-grams, pooled. Throws Error(kNoNgrams).
double distinct_n(const std::vector<Sentence> &hyps, std::size_t n);

// Shannon entropy in nats of the pooled n-gram distribution. Throws
// Error(kNoNgrams).
double entropy_n(const std::vector<Sentence> &hyps, std::size_t n);

struct KnowledgeBucket {
  std::size_t examples = 0;
  double mean_used = 0.0;
};

struct KnowledgeUsage {
  double mean_used = 0.0;
  std::vector<std::size_t> used;
  // Keyed by the number of distinct retrieved entities of the post.
  std::map<std::size_t, KnowledgeBucket> curve;
};

// Distinct retrieved entities that occur as hypothesis tokens.
std::size_t used_entities(const Sentence &hyp, const std::vector<Subgraph> &subgraphs);

KnowledgeUsage knowledge_incorporation(const std::vector<Sentence> &hyps,
                                       const std::vector<std::vector<Subgraph>> &per_post);

struct EvalReport {
  double bleu[4] = {0, 0, 0, 0};
  double nist[4] = {0, 0, 0, 0};
  double meteor = 0.0;
  double dist_1 = 0.0;
  double dist_2 = 0.0;
  double ent_4 = 0.0;
  std::optional<double> knowledge_used_mean;
  std::size_t sentences = 0;
};

// Every metric above; unreferenced metrics fall back to 0 when the
// hypotheses have no n-grams of the needed order. per_post may be null.
EvalReport evaluate(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs,
                    const std::vector<std::vector<Subgraph>> *per_post = nullptr);

// "key<spaces>value" lines.
std::string format_report_text(const EvalReport &report);
// One JSON object on a single line.
std::string format_report_json(const EvalReport &report);

}  // namespace kgdial

#endif  // KGDIAL_METRICS_H_
