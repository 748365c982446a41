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

#ifndef KGDIAL_VOCAB_H_
#define KGDIAL_VOCAB_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgdial/kb.h"

namespace kgdial {

using TokenId = std::uint32_t;

// Word-level vocabulary shared by post text, responses and flattened triples.
// Ids 0..4 are reserved for the special tokens.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kCtx = 4;
  static constexpr std::size_t kNumSpecials = 5;

  Vocabulary();

  // Returns the id of piece, inserting it if new. Existing spellings keep
  // their id.
  TokenId insert(const std::string &piece);

  bool contains(const std::string &piece) const {
    return piece_to_id_.count(piece) > 0;
  }
  // kUnk for unknown pieces.
  TokenId id(const std::string &piece) const;
  // Throws BadId.
  const std::string &piece(TokenId id) const;

  std::size_t size() const { return id_to_piece_.size(); }
  const std::vector<std::string> &pieces() const { return id_to_piece_; }

  static bool is_special(TokenId id) { return id < kNumSpecials; }

  // Stable content hash over the ordered piece list.
  std::uint64_t hash() const;

  // One piece per line; line number is the id.
  void save(std::ostream &out) const;
  static Vocabulary load(std::istream &in);
  void save_file(const std::string &path) const;
  static Vocabulary load_file(const std::string &path);

  friend bool operator==(const Vocabulary &a, const Vocabulary &b) {
    return a.id_to_piece_ == b.id_to_piece_;
  }

 private:
  std::unordered_map<std::string, TokenId> piece_to_id_;
  std::vector<std::string> id_to_piece_;
};

struct TokenSeq {
  std::vector<TokenId> ids;

  std::size_t length() const { return ids.size(); }
  friend bool operator==(const TokenSeq &, const TokenSeq &) = default;
};

// [head] ++ camel_split(relation) ++ [tail], lowercase.
std::vector<std::string> flatten_triple(const Triple &t);

// Normalized tokens of every post then response, pair by pair.
std::vector<std::string> corpus_tokens(const std::vector<DialoguePair> &pairs);

// Corpus tokens with frequency >= min_freq in first-seen order, followed by
// every flattened-triple token of the KB (regardless of frequency) in
// first-seen order. Throws Error(kEmptyCorpus) on an empty corpus.
Vocabulary build_vocabulary(std::span<const std::string> corpus_tokens,
                            const KnowledgeBase &kb, std::size_t min_freq = 1);

// Whitespace split + lowercase; OOV -> UNK.
TokenSeq encode_text(const std::string &text, const Vocabulary &v,
                     bool add_bos_eos);

// Space-joined pieces with special tokens removed. Throws BadId.
std::string decode_ids(const TokenSeq &seq, const Vocabulary &v);

}  // namespace kgdial

#endif  // KGDIAL_VOCAB_H_
