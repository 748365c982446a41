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

#ifndef KGDIAL_KB_H_
#define KGDIAL_KB_H_

#include <atomic>
#include <cstddef>
#include <istream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgdial {

// A (head, relation, tail) fact. Head and tail are single lowercase words,
// the relation is a CamelCase name such as "RelatedTo".
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  bool contains(const std::string &name) const {
    return head == name || tail == name;
  }
  friend bool operator==(const Triple &, const Triple &) = default;
  friend auto operator<=>(const Triple &, const Triple &) = default;
};

// Immutable triple store with a concept -> incident-triples index. Safe for
// concurrent readers once constructed.
class KnowledgeBase {
 public:
  // Builds the surface index. Duplicate triples are kept unless dedup is set.
  explicit KnowledgeBase(std::vector<Triple> triples, bool dedup = true);

  KnowledgeBase(const KnowledgeBase &other)
      : triples_(other.triples_), surface_index_(other.surface_index_) {}
  KnowledgeBase(KnowledgeBase &&other) noexcept
      : triples_(std::move(other.triples_)),
        surface_index_(std::move(other.surface_index_)) {}

  const std::vector<Triple> &triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }

  bool has_concept(const std::string &name) const {
    return surface_index_.count(name) > 0;
  }

  // Sorted indices of triples with the concept as head or tail. Empty for
  // unknown concepts.
  const std::vector<std::size_t> &incident(const std::string &name) const;

  const std::unordered_map<std::string, std::vector<std::size_t>> &
  surface_index() const {
    return surface_index_;
  }

  // Number of incident() lookups served; used to check that code paths which
  // must not consult the KB really don't.
  std::size_t lookup_count() const { return lookups_.load(); }

 private:
  std::vector<Triple> triples_;
  std::unordered_map<std::string, std::vector<std::size_t>> surface_index_;
  mutable std::atomic<std::size_t> lookups_{0};
};

// Reads "head<TAB>relation<TAB>tail" lines. Blank lines and lines starting
// with '#' are skipped. Throws MalformedLine on a bad field count or an
// invalid field and Error(kEmptyKB) when nothing remains.
KnowledgeBase load_triples(std::istream &in, bool dedup = true);
KnowledgeBase load_triples_file(const std::string &path, bool dedup = true);

void write_triples(std::ostream &out, const std::vector<Triple> &triples);

struct Mention {
  std::string surface;
  std::vector<std::size_t> positions;
};

struct Subgraph {
  Mention mention;
  std::vector<Triple> triples;
};

struct RetrievalConfig {
  std::size_t max_triples_per_subgraph = 16;
  std::size_t max_subgraphs = 8;
};

const std::unordered_set<std::string> &default_stopwords();

// One mention per distinct post token that is a KB concept and not a
// stopword, in order of first occurrence. Tokens must already be lowercase.
std::vector<Mention> recognize_mentions(
    const std::vector<std::string> &post_tokens, const KnowledgeBase &kb,
    const std::unordered_set<std::string> &stopwords);

// Groups each mention's incident triples (KB order, deduplicated, capped)
// into a subgraph. Mentions without triples are dropped.
std::vector<Subgraph> group_subgraphs(const std::vector<Mention> &mentions,
                                      const KnowledgeBase &kb,
                                      const RetrievalConfig &cfg);

// Normalizes the post text, then recognizes and groups in one step.
std::vector<Subgraph> retrieve(const std::string &post, const KnowledgeBase &kb,
                               const RetrievalConfig &cfg,
                               const std::unordered_set<std::string> &stopwords =
                                   default_stopwords());

// Distinct heads and tails over all subgraph triples, sorted.
std::vector<std::string> retrieved_entities(const std::vector<Subgraph> &subgraphs);

struct DialoguePair {
  std::string post;
  std::string response;
};

// One JSON object per line with string fields "post" and "response".
std::vector<DialoguePair> load_corpus(std::istream &in);
std::vector<DialoguePair> load_corpus_file(const std::string &path);
void write_corpus(std::ostream &out, const std::vector<DialoguePair> &pairs);

}  // namespace kgdial

#endif  // KGDIAL_KB_H_
