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

#include "kgdial/kb.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

#include "json.hpp"
#include "kgdial/errors.h"
#include "kgdial/text.h"

namespace kgdial {

namespace {

const std::vector<std::size_t> kNoTriples;

std::vector<std::string> split_tabs(const std::string &line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool has_space(const std::string &s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::vector<Triple> triples, bool dedup) {
  if (dedup) {
    std::set<Triple> seen;
    triples_.reserve(triples.size());
    for (Triple &t : triples) {
      if (seen.insert(t).second) triples_.push_back(std::move(t));
    }
  } else {
    triples_ = std::move(triples);
  }
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const Triple &t = triples_[i];
    surface_index_[t.head].push_back(i);
    if (t.tail != t.head) surface_index_[t.tail].push_back(i);
  }
}

const std::vector<std::size_t> &KnowledgeBase::incident(
    const std::string &name) const {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  auto it = surface_index_.find(name);
  return it == surface_index_.end() ? kNoTriples : it->second;
}

KnowledgeBase load_triples(std::istream &in, bool dedup) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 3) {
      throw MalformedLine(line_no, "expected 3 tab-separated fields, got " +
                                       std::to_string(fields.size()));
    }
    Triple t{to_lower(fields[0]), fields[1], to_lower(fields[2])};
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      throw MalformedLine(line_no, "empty field");
    }
    if (has_space(t.head) || has_space(t.tail) || has_space(t.relation)) {
      throw MalformedLine(line_no, "concepts must be single words");
    }
    triples.push_back(std::move(t));
  }
  KnowledgeBase kb(std::move(triples), dedup);
  if (kb.size() == 0) throw Error(ErrorCode::kEmptyKB, "no triples loaded");
  return kb;
}

KnowledgeBase load_triples_file(const std::string &path, bool dedup) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return load_triples(in, dedup);
}

void write_triples(std::ostream &out, const std::vector<Triple> &triples) {
  for (const Triple &t : triples) {
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
}

const std::unordered_set<std::string> &default_stopwords() {
  static const std::unordered_set<std::string> kStopwords = {
      "a",     "an",    "the",   "and",  "or",    "but",   "if",    "of",
      "to",    "in",    "on",    "at",   "by",    "for",   "with",  "from",
      "as",    "is",    "are",   "was",  "were",  "be",    "been",  "am",
      "i",     "you",   "he",    "she",  "it",    "we",    "they",  "me",
      "my",    "your",  "his",   "her",  "its",   "our",   "their", "this",
      "that",  "these", "those", "who",  "what",  "which", "do",    "does",
      "did",   "not",   "no",    "so",   "than",  "too",   "very",  "can",
      "will",  "just",  "there", "here", "then",  "have",  "has",   "had",
      "i'm",   "it's",  "don't", "s",    "t",     ",",     ".",     "!",
      "?",     ";",     ":",     "\"",   "(",     ")"};
  return kStopwords;
}

std::vector<Mention> recognize_mentions(
    const std::vector<std::string> &post_tokens, const KnowledgeBase &kb,
    const std::unordered_set<std::string> &stopwords) {
  std::vector<Mention> mentions;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t pos = 0; pos < post_tokens.size(); ++pos) {
    const std::string &token = post_tokens[pos];
    auto it = slot.find(token);
    if (it != slot.end()) {
      mentions[it->second].positions.push_back(pos);
      continue;
    }
    if (stopwords.count(token) > 0 || !kb.has_concept(token)) continue;
    slot.emplace(token, mentions.size());
    mentions.push_back(Mention{token, {pos}});
  }
  return mentions;
}

std::vector<Subgraph> group_subgraphs(const std::vector<Mention> &mentions,
                                      const KnowledgeBase &kb,
                                      const RetrievalConfig &cfg) {
  std::vector<Subgraph> out;
  for (const Mention &m : mentions) {
    if (out.size() >= cfg.max_subgraphs) break;
    Subgraph sg{m, {}};
    std::set<Triple> seen;
    for (std::size_t idx : kb.incident(m.surface)) {
      if (sg.triples.size() >= cfg.max_triples_per_subgraph) break;
      const Triple &t = kb.triples()[idx];
      if (seen.insert(t).second) sg.triples.push_back(t);
    }
    if (!sg.triples.empty()) out.push_back(std::move(sg));
  }
  return out;
}

std::vector<Subgraph> retrieve(const std::string &post, const KnowledgeBase &kb,
                               const RetrievalConfig &cfg,
                               const std::unordered_set<std::string> &stopwords) {
  return group_subgraphs(recognize_mentions(normalize_tokens(post), kb, stopwords),
                         kb, cfg);
}

std::vector<std::string> retrieved_entities(const std::vector<Subgraph> &subgraphs) {
  std::set<std::string> entities;
  for (const Subgraph &sg : subgraphs) {
    for (const Triple &t : sg.triples) {
      entities.insert(t.head);
      entities.insert(t.tail);
    }
  }
  return {entities.begin(), entities.end()};
}

std::vector<DialoguePair> load_corpus(std::istream &in) {
  std::vector<DialoguePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw MalformedLine(line_no, e.what());
    }
    if (!obj.is_object() || !obj.contains("post") || !obj.contains("response") ||
        !obj["post"].is_string() || !obj["response"].is_string()) {
      throw MalformedLine(line_no, "expected string fields post and response");
    }
    pairs.push_back({obj["post"].get<std::string>(),
                     obj["response"].get<std::string>()});
  }
  return pairs;
}

std::vector<DialoguePair> load_corpus_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return load_corpus(in);
}

void write_corpus(std::ostream &out, const std::vector<DialoguePair> &pairs) {
  for (const DialoguePair &p : pairs) {
    nlohmann::json obj = {{"post", p.post}, {"response", p.response}};
    out << obj.dump() << '\n';
  }
}

}  // namespace kgdial
