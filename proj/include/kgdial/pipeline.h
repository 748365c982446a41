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

// Workdir-level steps shared by the command-line tool and the Python module:
// prepare (vocabulary, subgraph cache, corpus statistics), train, and the
// small exporters.

#ifndef KGDIAL_PIPELINE_H_
#define KGDIAL_PIPELINE_H_

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "kgdial/config.h"
#include "kgdial/kb.h"
#include "kgdial/model.h"
#include "kgdial/trainer.h"
#include "kgdial/vocab.h"

namespace kgdial {

struct WorkdirPaths {
  std::string vocab;        // vocab.txt
  std::string kb;           // kb.tsv
  std::string corpus;       // corpus.jsonl
  std::string subgraphs;    // subgraphs.jsonl
  std::string stats;        // stats.json
  std::string checkpoints;  // checkpoints/
  std::string model;        // model.ckpt

  static WorkdirPaths of(const std::string &dir);
};

struct PrepareStats {
  std::size_t pairs = 0;
  std::size_t vocab_size = 0;
  std::size_t kb_triples = 0;
  // Unique over the whole corpus.
  std::size_t retrieved_entities = 0;
  std::size_t retrieved_triples = 0;
  double avg_entities_in_posts = 0.0;
  // Retrieved entities of the pair that occur in its response.
  double avg_entities_in_responses = 0.0;
  double avg_subgraphs_per_pair = 0.0;
  double avg_triples_per_pair = 0.0;
};

PrepareStats compute_stats(const std::vector<DialoguePair> &pairs,
                           const std::vector<std::vector<Subgraph>> &per_pair,
                           std::size_t vocab_size, std::size_t kb_triples);
std::string format_stats_text(const PrepareStats &stats);
std::string format_stats_json(const PrepareStats &stats);

// One JSON line per pair: {"pair_id", "subgraphs": [{"mention", "positions",
// "triples": [[h, r, t], ...]}]}.
void write_subgraph_cache(std::ostream &out,
                          const std::vector<std::vector<Subgraph>> &per_pair);
std::vector<std::vector<Subgraph>> read_subgraph_cache(std::istream &in);

std::vector<std::vector<Subgraph>> retrieve_all(const std::vector<DialoguePair> &pairs,
                                                const KnowledgeBase &kb,
                                                const RetrievalConfig &cfg);

struct PrepareResult {
  Vocabulary vocab;
  std::vector<std::vector<Subgraph>> subgraphs;
  PrepareStats stats;
};

// Loads both inputs, builds the vocabulary, retrieves every post, and writes
// the vocabulary, the inputs, the cache and the stats into workdir.
PrepareResult prepare_workdir(const std::string &kb_path, const std::string &corpus_path,
                              const std::string &workdir, const RetrievalConfig &cfg);

// Trains on a prepared workdir. cfg.kb / cfg.corpus override the copies in
// the workdir. Epoch checkpoints and train.log go under checkpoints/; the
// final model goes to cfg.checkpoint, or model.ckpt in the workdir.
TrainReport train_workdir(const RunConfig &cfg, std::ostream *log = nullptr,
                          std::string *model_path = nullptr);

// "token<TAB>v1 v2 ... vE" for every vocabulary entry in id order.
void export_embeddings(std::ostream &out, const Model &model, const Vocabulary &v);

}  // namespace kgdial

#endif  // KGDIAL_PIPELINE_H_
