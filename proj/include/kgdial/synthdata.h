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

// Seeded toy worlds: concepts are pseudo-words named by index, each linked
// by a two-piece relation to a category word. Posts mention one or two
// concepts; responses name the linked categories and never repeat the
// concept, so the answer is only recoverable through the knowledge base.

#ifndef KGDIAL_SYNTHDATA_H_
#define KGDIAL_SYNTHDATA_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kgdial/kb.h"

namespace kgdial {

struct SynthSpec {
  std::size_t n_concepts = 60;
  std::size_t n_relations = 4;
  std::size_t n_tails = 8;
  // At least n_concepts; every concept heads one triple, extras are random.
  std::size_t n_triples = 60;
  std::size_t n_pairs = 32;
  std::uint64_t seed = 42;
  // Share of posts that mention two concepts.
  double two_concept_fraction = 0.25;

  // Throws Error(kSpecInfeasible).
  void validate() const;
};

struct ManifestEntry {
  std::size_t pair_id = 0;
  std::string gold_entity;
};

struct SynthData {
  std::vector<Triple> triples;
  std::vector<DialoguePair> pairs;
  std::vector<ManifestEntry> manifest;
};

// Name of concept i; the same for every seed.
std::string concept_name(std::size_t index);
std::size_t max_synth_concepts();

SynthData generate_synthdata(const SynthSpec &spec);

// Writes kb.tsv, corpus.jsonl and manifest.jsonl into dir (created if
// needed).
void write_synthdata(const SynthData &data, const std::string &dir);
std::vector<ManifestEntry> load_manifest_file(const std::string &path);

}  // namespace kgdial

#endif  // KGDIAL_SYNTHDATA_H_
