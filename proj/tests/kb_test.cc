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
#include <set>
#include <sstream>

#include "gtest/gtest.h"
#include "kgdial/errors.h"
#include "kgdial/random.h"
#include "kgdial/text.h"

namespace kgdial {
namespace {

KnowledgeBase kb_from(const std::string &tsv, bool dedup = true) {
  std::istringstream in(tsv);
  return load_triples(in, dedup);
}

TEST(LoadTriples, CountsWellFormedLines) {
  KnowledgeBase kb = kb_from("coffee\tRelatedTo\tmilk\nmilk\tIsA\tdrink\n");
  EXPECT_EQ(kb.size(), 2u);
}

TEST(LoadTriples, ReportsMalformedLineNumber) {
  try {
    kb_from("coffee\tRelatedTo\n");
    FAIL() << "expected MalformedLine";
  } catch (const MalformedLine &e) {
    EXPECT_EQ(e.line_no(), 1u);
  }
  try {
    kb_from("# header\ncoffee\tRelatedTo\tmilk\nbad line\n");
    FAIL() << "expected MalformedLine";
  } catch (const MalformedLine &e) {
    EXPECT_EQ(e.line_no(), 3u);
  }
}

TEST(LoadTriples, RejectsMultiWordConceptsAndEmptyFields) {
  EXPECT_THROW(kb_from("ice cream\tIsA\tfood\n"), MalformedLine);
  EXPECT_THROW(kb_from("\tIsA\tfood\n"), MalformedLine);
}

TEST(LoadTriples, DedupMatchesSetOracle) {
  const std::string tsv =
      "coffee\tRelatedTo\tmilk\ncoffee\tRelatedTo\tmilk\nmilk\tIsA\tdrink\n";
  KnowledgeBase kb = kb_from(tsv);
  KnowledgeBase raw = kb_from(tsv, false);
  std::set<Triple> oracle(raw.triples().begin(), raw.triples().end());
  EXPECT_EQ(kb.size(), oracle.size());
  EXPECT_EQ(raw.size(), 3u);
  // First occurrence order is kept.
  EXPECT_EQ(kb.triples()[0], (Triple{"coffee", "RelatedTo", "milk"}));
}

TEST(LoadTriples, EmptyKnowledgeBase) {
  try {
    kb_from("# nothing here\n\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyKB);
  }
}

TEST(RecognizeMentions, CaseStudyPost) {
  KnowledgeBase kb = kb_from(
      "drink\tRelatedTo\tenergy_drink\n"
      "consumer\tRelatedTo\tbuyer\n"
      "hates\tRelatedTo\tlove\n"
      "tea\tIsA\tdrink\n"
      "hilarious\tRelatedTo\tfunny\n"
      "an\tRelatedTo\tarticle\n");
  auto tokens = normalize_tokens(
      "As an energy drink consumer who hates tea, this is hilarious.");
  std::vector<Mention> mentions = recognize_mentions(tokens, kb, default_stopwords());
  std::vector<std::string> surfaces;
  for (const Mention &m : mentions) surfaces.push_back(m.surface);
  EXPECT_EQ(surfaces, (std::vector<std::string>{"drink", "consumer", "hates", "tea",
                                                "hilarious"}));
  EXPECT_EQ(mentions[0].positions, (std::vector<std::size_t>{3}));
}

TEST(RecognizeMentions, EmptyPost) {
  KnowledgeBase kb = kb_from("coffee\tRelatedTo\tmilk\n");
  EXPECT_TRUE(recognize_mentions({}, kb, default_stopwords()).empty());
}

TEST(RecognizeMentions, StoplistedConceptsAreSkipped) {
  KnowledgeBase kb = kb_from("an\tRelatedTo\tarticle\n");
  std::vector<std::string> post = {"an", "the", "of"};
  // Oracle: KB membership minus the stoplist.
  std::vector<std::string> oracle;
  for (const auto &tok : post) {
    if (kb.has_concept(tok) && !default_stopwords().count(tok)) oracle.push_back(tok);
  }
  EXPECT_TRUE(oracle.empty());
  EXPECT_TRUE(recognize_mentions(post, kb, default_stopwords()).empty());
}

TEST(RecognizeMentions, CollectsAllPositionsOfRepeatedToken) {
  KnowledgeBase kb = kb_from("milk\tIsA\tdrink\n");
  auto mentions = recognize_mentions({"milk", "and", "milk"}, kb, {});
  ASSERT_EQ(mentions.size(), 1u);
  EXPECT_EQ(mentions[0].positions, (std::vector<std::size_t>{0, 2}));
}

TEST(GroupSubgraphs, SingleTriple) {
  KnowledgeBase kb = kb_from("coffee\tRelatedTo\tmilk\n");
  auto sgs = group_subgraphs({Mention{"milk", {0}}}, kb, {});
  ASSERT_EQ(sgs.size(), 1u);
  EXPECT_EQ(sgs[0].triples, (std::vector<Triple>{{"coffee", "RelatedTo", "milk"}}));
}

TEST(GroupSubgraphs, MentionWithoutTriplesIsDropped) {
  KnowledgeBase kb = kb_from("coffee\tRelatedTo\tmilk\n");
  EXPECT_TRUE(group_subgraphs({Mention{"tea", {0}}}, kb, {}).empty());
}

TEST(GroupSubgraphs, MatchesBruteForceScan) {
  KnowledgeBase kb = kb_from("coffee\tRelatedTo\tmilk\nmilk\tIsA\tdrink\ntea\tIsA\tdrink\n");
  auto sgs = group_subgraphs({Mention{"milk", {0}}}, kb, {});
  std::vector<Triple> oracle;
  for (const Triple &t : kb.triples()) {
    if (t.head == "milk" || t.tail == "milk") oracle.push_back(t);
  }
  ASSERT_EQ(sgs.size(), 1u);
  EXPECT_EQ(sgs[0].triples, oracle);
  EXPECT_EQ(oracle.size(), 2u);
}

TEST(GroupSubgraphs, CapsApplyInOrder) {
  KnowledgeBase kb = kb_from(
      "a1\tIsA\tx\na2\tIsA\tx\na3\tIsA\tx\nb1\tIsA\ty\nc1\tIsA\tz\n");
  RetrievalConfig cfg{2, 2};
  auto sgs = group_subgraphs(
      {Mention{"x", {0}}, Mention{"none", {1}}, Mention{"y", {2}}, Mention{"z", {3}}},
      kb, cfg);
  ASSERT_EQ(sgs.size(), 2u);
  EXPECT_EQ(sgs[0].mention.surface, "x");
  EXPECT_EQ(sgs[0].triples.size(), 2u);
  EXPECT_EQ(sgs[0].triples[1].head, "a2");
  EXPECT_EQ(sgs[1].mention.surface, "y");
}

TEST(GroupSubgraphs, DuplicatesInUndedupedKbCollapse) {
  KnowledgeBase kb = kb_from("milk\tIsA\tdrink\nmilk\tIsA\tdrink\n", false);
  auto sgs = group_subgraphs({Mention{"milk", {0}}}, kb, {});
  ASSERT_EQ(sgs.size(), 1u);
  EXPECT_EQ(sgs[0].triples.size(), 1u);
}

// Random KBs: index lookups agree with a linear scan, retrieval respects the
// containment and cap invariants, and recognition is repeatable.
TEST(KbProperties, RandomKnowledgeBases) {
  Rng rng(1234);
  const std::vector<std::string> relations = {"RelatedTo", "IsA", "PartOf", "UsedFor"};
  for (int round = 0; round < 40; ++round) {
    const std::size_t n_concepts = 3 + rng.below(30);
    const std::size_t n_triples = 1 + rng.below(300);
    std::vector<Triple> triples;
    for (std::size_t i = 0; i < n_triples; ++i) {
      triples.push_back({"c" + std::to_string(rng.below(n_concepts)),
                         relations[rng.below(relations.size())],
                         "c" + std::to_string(rng.below(n_concepts))});
    }
    KnowledgeBase kb(triples, rng.below(2) == 0);
    for (std::size_t c = 0; c < n_concepts; ++c) {
      const std::string name = "c" + std::to_string(c);
      std::vector<std::size_t> scan;
      for (std::size_t i = 0; i < kb.size(); ++i) {
        if (kb.triples()[i].contains(name)) scan.push_back(i);
      }
      EXPECT_EQ(kb.incident(name), scan);
    }
    EXPECT_LE(kb.surface_index().size(), n_concepts);

    std::vector<std::string> post;
    for (std::size_t i = 0; i < 12; ++i) post.push_back("c" + std::to_string(rng.below(n_concepts + 5)));
    auto m1 = recognize_mentions(post, kb, {});
    auto m2 = recognize_mentions(post, kb, {});
    ASSERT_EQ(m1.size(), m2.size());
    for (std::size_t i = 0; i < m1.size(); ++i) {
      EXPECT_EQ(m1[i].surface, m2[i].surface);
      EXPECT_EQ(m1[i].positions, m2[i].positions);
      EXPECT_TRUE(std::is_sorted(m1[i].positions.begin(), m1[i].positions.end()));
    }
    RetrievalConfig cfg{1 + rng.below(6), 1 + rng.below(4)};
    auto sgs = group_subgraphs(m1, kb, cfg);
    std::size_t total = 0;
    for (const Subgraph &sg : sgs) {
      EXPECT_GE(sg.triples.size(), 1u);
      EXPECT_LE(sg.triples.size(), cfg.max_triples_per_subgraph);
      for (const Triple &t : sg.triples) EXPECT_TRUE(t.contains(sg.mention.surface));
      total += sg.triples.size();
    }
    EXPECT_LE(sgs.size(), cfg.max_subgraphs);
    EXPECT_LE(total, cfg.max_subgraphs * cfg.max_triples_per_subgraph);
  }
}

TEST(Corpus, ParsesJsonLines) {
  std::istringstream in(
      "{\"post\": \"i like milk\", \"response\": \"milk is a drink\"}\n\n"
      "{\"post\": \"tea?\", \"response\": \"yes\"}\n");
  auto pairs = load_corpus(in);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].post, "tea?");
  std::istringstream bad("{\"post\": 3}\n");
  EXPECT_THROW(load_corpus(bad), MalformedLine);
}

}  // namespace
}  // namespace kgdial
