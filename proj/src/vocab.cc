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

#include "kgdial/vocab.h"

#include <fstream>

#include "kgdial/errors.h"
#include "kgdial/text.h"

namespace kgdial {

namespace {

const char *const kSpecialPieces[] = {"<pad>", "<unk>", "<s>", "</s>", "<ctx>"};

}  // namespace

Vocabulary::Vocabulary() {
  for (const char *piece : kSpecialPieces) insert(piece);
}

TokenId Vocabulary::insert(const std::string &piece) {
  auto [it, inserted] =
      piece_to_id_.emplace(piece, static_cast<TokenId>(id_to_piece_.size()));
  if (inserted) id_to_piece_.push_back(piece);
  return it->second;
}

TokenId Vocabulary::id(const std::string &piece) const {
  auto it = piece_to_id_.find(piece);
  return it == piece_to_id_.end() ? kUnk : it->second;
}

const std::string &Vocabulary::piece(TokenId id) const {
  if (id >= id_to_piece_.size()) throw BadId(id, id_to_piece_.size());
  return id_to_piece_[id];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a64("kgdial-vocab");
  for (const std::string &piece : id_to_piece_) {
    h = fnv1a64(piece, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void Vocabulary::save(std::ostream &out) const {
  for (const std::string &piece : id_to_piece_) out << piece << '\n';
}

Vocabulary Vocabulary::load(std::istream &in) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no <= kNumSpecials) {
      if (line != kSpecialPieces[line_no - 1]) {
        throw MalformedLine(line_no, "expected special token " +
                                         std::string(kSpecialPieces[line_no - 1]));
      }
      continue;
    }
    if (line.empty() || v.contains(line)) {
      throw MalformedLine(line_no, "empty or duplicate piece");
    }
    v.insert(line);
  }
  if (line_no < kNumSpecials) {
    throw MalformedLine(line_no, "vocabulary is missing special tokens");
  }
  return v;
}

void Vocabulary::save_file(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  save(out);
}

Vocabulary Vocabulary::load_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return load(in);
}

std::vector<std::string> flatten_triple(const Triple &t) {
  std::vector<std::string> out;
  out.push_back(to_lower(t.head));
  for (std::string &piece : camel_split(t.relation)) out.push_back(std::move(piece));
  out.push_back(to_lower(t.tail));
  return out;
}

std::vector<std::string> corpus_tokens(const std::vector<DialoguePair> &pairs) {
  std::vector<std::string> out;
  for (const DialoguePair &p : pairs) {
    for (const std::string *text : {&p.post, &p.response}) {
      for (std::string &tok : normalize_tokens(*text)) out.push_back(std::move(tok));
    }
  }
  return out;
}

Vocabulary build_vocabulary(std::span<const std::string> corpus_tokens,
                            const KnowledgeBase &kb, std::size_t min_freq) {
  if (corpus_tokens.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot build a vocabulary from nothing");
  }
  std::unordered_map<std::string, std::size_t> freq;
  std::vector<std::string> order;
  for (const std::string &tok : corpus_tokens) {
    if (freq[tok]++ == 0) order.push_back(tok);
  }
  Vocabulary v;
  for (const std::string &tok : order) {
    if (freq[tok] >= min_freq) v.insert(tok);
  }
  for (const Triple &t : kb.triples()) {
    for (const std::string &piece : flatten_triple(t)) v.insert(piece);
  }
  return v;
}

TokenSeq encode_text(const std::string &text, const Vocabulary &v,
                     bool add_bos_eos) {
  TokenSeq seq;
  if (add_bos_eos) seq.ids.push_back(Vocabulary::kBos);
  for (const std::string &tok : split_whitespace(to_lower(text))) {
    seq.ids.push_back(v.id(tok));
  }
  if (add_bos_eos) seq.ids.push_back(Vocabulary::kEos);
  return seq;
}

std::string decode_ids(const TokenSeq &seq, const Vocabulary &v) {
  std::vector<std::string> pieces;
  for (TokenId id : seq.ids) {
    const std::string &piece = v.piece(id);
    if (!Vocabulary::is_special(id)) pieces.push_back(piece);
  }
  return join(pieces, " ");
}

}  // namespace kgdial
