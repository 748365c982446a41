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

#include "kgdial/synthdata.h"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "kgdial/errors.h"
#include "kgdial/random.h"

namespace kgdial {

namespace {

constexpr std::array<const char *, 8> kSyllables = {"ka", "lo", "mi", "ru",
                                                    "te", "vo", "zi", "ne"};
constexpr std::size_t kSyllablesPerName = 3;

constexpr std::array<const char *, 8> kRelations = {
    "HasColor", "LivesIn", "MadeOf", "UsedFor", "PartOf", "FoundIn", "SmellsLike", "MovesBy"};

constexpr std::array<const char *, 16> kTails = {
    "red",  "blue", "green",  "amber", "forest", "river", "stone", "glass",
    "wool", "iron", "desert", "cloud", "salt",   "honey", "cedar", "copper"};

struct Template {
  const char *post;
  const char *response;
};

// {0} {1} are concepts; {2} {3} are their categories (sorted for two).
constexpr std::array<Template, 4> kSingle = {{
    {"have you ever seen a {0} ?", "oh , that one goes with {2} ."},
    {"tell me about the {0} .", "it reminds me of {2} ."},
    {"what do you know about {0} ?", "people connect it with {2} ."},
    {"i keep thinking about my {0} .", "i would say {2} , honestly ."},
}};

constexpr std::array<Template, 2> kDouble = {{
    {"{0} or {1} , which one ?", "{2} and {3} , both good ."},
    {"compare {0} with {1} please .", "one is {2} , the other {3} ."},
}};

[[noreturn]] void infeasible(const std::string &why) {
  throw Error(ErrorCode::kSpecInfeasible, "synthetic spec infeasible: " + why);
}

}  // namespace

std::size_t max_synth_concepts() {
  std::size_t n = 1;
  for (std::size_t i = 0; i < kSyllablesPerName; ++i) n *= kSyllables.size();
  return n;
}

std::string concept_name(std::size_t index) {
  std::string name;
  for (std::size_t i = 0; i < kSyllablesPerName; ++i) {
    name += kSyllables[index % kSyllables.size()];
    index /= kSyllables.size();
  }
  return name;
}

void SynthSpec::validate() const {
  if (n_pairs < 1) infeasible("n_pairs must be at least 1");
  if (n_concepts < 1 || n_concepts > max_synth_concepts()) {
    infeasible(fmt::format("n_concepts must lie in [1, {}]", max_synth_concepts()));
  }
  if (n_relations < 1 || n_relations > kRelations.size()) {
    infeasible(fmt::format("n_relations must lie in [1, {}]", kRelations.size()));
  }
  if (n_tails < 1 || n_tails > kTails.size()) {
    infeasible(fmt::format("n_tails must lie in [1, {}]", kTails.size()));
  }
  if (n_triples < n_concepts) infeasible("n_triples must be at least n_concepts");
  if (n_triples > n_concepts * n_relations * n_tails) {
    infeasible("n_triples exceeds the number of distinct triples");
  }
  if (!(two_concept_fraction >= 0.0 && two_concept_fraction <= 1.0)) {
    infeasible("two_concept_fraction must lie in [0, 1]");
  }
  if (two_concept_fraction > 0.0 && n_concepts < 2) {
    infeasible("two-concept posts need at least 2 concepts");
  }
}

SynthData generate_synthdata(const SynthSpec &spec) {
  spec.validate();
  Rng rng(spec.seed);
  SynthData data;
  std::set<Triple> seen;
  std::vector<std::string> category(spec.n_concepts);
  for (std::size_t i = 0; i < spec.n_concepts; ++i) {
    Triple t{concept_name(i), kRelations[rng.below(spec.n_relations)],
             kTails[rng.below(spec.n_tails)]};
    category[i] = t.tail;
    seen.insert(t);
    data.triples.push_back(std::move(t));
  }
  while (data.triples.size() < spec.n_triples) {
    Triple t{concept_name(rng.below(spec.n_concepts)), kRelations[rng.below(spec.n_relations)],
             kTails[rng.below(spec.n_tails)]};
    if (seen.insert(t).second) data.triples.push_back(std::move(t));
  }

  for (std::size_t id = 0; id < spec.n_pairs; ++id) {
    const bool two = spec.two_concept_fraction > 0.0 && rng.uniform() < spec.two_concept_fraction;
    const std::size_t a = rng.below(spec.n_concepts);
    DialoguePair pair;
    if (two) {
      std::size_t b = rng.below(spec.n_concepts - 1);
      if (b >= a) ++b;
      const Template &tpl = kDouble[rng.below(kDouble.size())];
      auto [lo, hi] = std::minmax(category[a], category[b]);
      pair.post = fmt::format(fmt::runtime(tpl.post), concept_name(a), concept_name(b), lo, hi);
      pair.response =
          fmt::format(fmt::runtime(tpl.response), concept_name(a), concept_name(b), lo, hi);
    } else {
      const Template &tpl = kSingle[rng.below(kSingle.size())];
      pair.post = fmt::format(fmt::runtime(tpl.post), concept_name(a), "", category[a], "");
      pair.response =
          fmt::format(fmt::runtime(tpl.response), concept_name(a), "", category[a], "");
    }
    data.pairs.push_back(std::move(pair));
    data.manifest.push_back({id, category[a]});
  }
  return data;
}

void write_synthdata(const SynthData &data, const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char *name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}/{}", dir, name));
    return out;
  };
  {
    std::ofstream out = open("kb.tsv");
    write_triples(out, data.triples);
  }
  {
    std::ofstream out = open("corpus.jsonl");
    write_corpus(out, data.pairs);
  }
  std::ofstream out = open("manifest.jsonl");
  for (const ManifestEntry &m : data.manifest) {
    out << nlohmann::json{{"pair_id", m.pair_id}, {"gold_entity", m.gold_entity}}.dump() << '\n';
  }
}

std::vector<ManifestEntry> load_manifest_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("pair_id").get<std::size_t>(), j.at("gold_entity").get<std::string>()});
    } catch (const nlohmann::json::exception &e) {
      throw MalformedLine(line_no, e.what());
    }
  }
  return out;
}

}  // namespace kgdial
