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

#include <sstream>

#include "gtest/gtest.h"
#include "kgdial/errors.h"
#include "kgdial/random.h"
#include "kgdial/text.h"

namespace kgdial {
namespace {

KnowledgeBase coffee_kb() {
  return KnowledgeBase({{"coffee", "RelatedTo", "milk"}, {"dog", "IsA", "animal"}});
}

TEST(FlattenTriple, Examples) {
  EXPECT_EQ(flatten_triple({"coffee", "RelatedTo", "milk"}),
            (std::vector<std::string>{"coffee", "related", "to", "milk"}));
  EXPECT_EQ(flatten_triple({"milk", "RelatedTo", "milk"}),
            (std::vector<std::string>{"milk", "related", "to", "milk"}));
  EXPECT_EQ(flatten_triple({"dog", "IsA", "animal"}),
            (std::vector<std::string>{"dog", "is", "a", "animal"}));
}

TEST(CamelSplit, BreaksAtUppercase) {
  EXPECT_EQ(camel_split("IsA"), (std::vector<std::string>{"is", "a"}));
  EXPECT_EQ(camel_split("HasPrerequisite"), (std::vector<std::string>{"has", "prerequisite"}));
  EXPECT_EQ(camel_split("AtLocation"), (std::vector<std::string>{"at", "location"}));
}

TEST(BuildVocabulary, SpecialsComeFirst) {
  std::vector<std::string> corpus = {"hi"};
  Vocabulary v = build_vocabulary(corpus, coffee_kb());
  EXPECT_EQ(v.piece(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.piece(Vocabulary::kCtx), "<ctx>");
  EXPECT_EQ(v.id("hi"), 5u);
  for (const char *w : {"hi", "coffee", "related", "to", "milk"}) {
    EXPECT_TRUE(v.contains(w)) << w;
  }
}

TEST(BuildVocabulary, MinFreqDropsRareCorpusTokensButKeepsTripleTokens) {
  std::vector<std::string> corpus = {"hi", "hi", "rare", "milk"};
  Vocabulary v = build_vocabulary(corpus, coffee_kb(), 2);
  EXPECT_TRUE(v.contains("hi"));
  EXPECT_FALSE(v.contains("rare"));
  EXPECT_TRUE(v.contains("milk"));
  EXPECT_EQ(encode_text("rare", v, false).ids, std::vector<TokenId>{Vocabulary::kUnk});
}

TEST(BuildVocabulary, RebuildIsIdentical) {
  std::vector<std::string> corpus = {"b", "a", "b", "c"};
  Vocabulary v1 = build_vocabulary(corpus, coffee_kb());
  Vocabulary v2 = build_vocabulary(corpus, coffee_kb());
  EXPECT_TRUE(v1 == v2);
  EXPECT_EQ(v1.hash(), v2.hash());
}

TEST(BuildVocabulary, EmptyCorpus) {
  try {
    build_vocabulary(std::vector<std::string>{}, coffee_kb());
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(BuildVocabulary, EveryFlattenedTokenIsKnown) {
  Rng rng(5);
  std::vector<Triple> triples;
  const std::vector<std::string> rels = {"RelatedTo", "IsA", "HasProperty", "CapableOf"};
  for (int i = 0; i < 200; ++i) {
    triples.push_back({"h" + std::to_string(rng.below(50)), rels[rng.below(4)],
                       "t" + std::to_string(rng.below(50))});
  }
  KnowledgeBase kb(triples);
  std::vector<std::string> corpus = {"hello", "world"};
  Vocabulary v = build_vocabulary(corpus, kb);
  for (const Triple &t : kb.triples()) {
    for (const std::string &piece : flatten_triple(t)) EXPECT_NE(v.id(piece), Vocabulary::kUnk);
  }
}

TEST(EncodeDecode, Examples) {
  std::vector<std::string> corpus = {"hi"};
  Vocabulary v = build_vocabulary(corpus, coffee_kb());
  EXPECT_EQ(encode_text("coffee milk", v, false).ids,
            (std::vector<TokenId>{v.id("coffee"), v.id("milk")}));
  EXPECT_EQ(encode_text("", v, true).ids,
            (std::vector<TokenId>{Vocabulary::kBos, Vocabulary::kEos}));
  EXPECT_EQ(encode_text("zzzunknown", v, false).ids, std::vector<TokenId>{Vocabulary::kUnk});
  EXPECT_EQ(decode_ids(encode_text("coffee milk", v, false), v), "coffee milk");
  EXPECT_EQ(decode_ids(TokenSeq{{Vocabulary::kBos, v.id("hi"), Vocabulary::kEos}}, v), "hi");
  EXPECT_THROW(decode_ids(TokenSeq{{static_cast<TokenId>(v.size())}}, v), BadId);
}

TEST(EncodeDecode, RoundTripProperty) {
  Rng rng(9);
  std::vector<std::string> corpus;
  for (int i = 0; i < 40; ++i) corpus.push_back("w" + std::to_string(i));
  Vocabulary v = build_vocabulary(corpus, coffee_kb());
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> words;
    const std::size_t len = rng.below(12);
    for (std::size_t i = 0; i < len; ++i) {
      words.push_back(v.pieces()[Vocabulary::kNumSpecials + rng.below(v.size() - Vocabulary::kNumSpecials)]);
    }
    const std::string s = join(words, " ");
    EXPECT_EQ(decode_ids(encode_text(s, v, rng.below(2) == 0), v), s);
  }
}

TEST(VocabularyFile, SaveLoadRoundTrip) {
  std::vector<std::string> corpus = {"hi", "there"};
  Vocabulary v = build_vocabulary(corpus, coffee_kb());
  std::stringstream buf;
  v.save(buf);
  Vocabulary loaded = Vocabulary::load(buf);
  EXPECT_TRUE(loaded == v);
  std::istringstream broken("<pad>\n<unk>\n");
  EXPECT_THROW(Vocabulary::load(broken), MalformedLine);
}

TEST(CorpusTokens, PostsThenResponsesNormalized) {
  auto toks = corpus_tokens({{"Hi there!", "hello"}, {"tea?", "yes"}});
  EXPECT_EQ(toks, (std::vector<std::string>{"hi", "there", "!", "hello", "tea", "?", "yes"}));
}

}  // namespace
}  // namespace kgdial
