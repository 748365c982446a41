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

#include "kgdial/pipeline.h"

#include <filesystem>
#include <optional>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "kgdial/checkpoint.h"
#include "kgdial/errors.h"
#include "kgdial/metrics.h"
#include "kgdial/text.h"

namespace kgdial {
namespace fs = std::filesystem;

WorkdirPaths WorkdirPaths::of(const std::string &dir) {
  const fs::path d(dir);
  return {(d / "vocab.txt").string(),      (d / "kb.tsv").string(),
          (d / "corpus.jsonl").string(),   (d / "subgraphs.jsonl").string(),
          (d / "stats.json").string(),     (d / "checkpoints").string(),
          (d / "model.ckpt").string()};
}

PrepareStats compute_stats(const std::vector<DialoguePair> &pairs,
                           const std::vector<std::vector<Subgraph>> &per_pair,
                           std::size_t vocab_size, std::size_t kb_triples) {
  if (pairs.size() != per_pair.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one subgraph list per pair expected");
  }
  PrepareStats s;
  s.pairs = pairs.size();
  s.vocab_size = vocab_size;
  s.kb_triples = kb_triples;
  std::set<std::string> entities;
  std::set<Triple> triples;
  double ent_posts = 0, ent_resp = 0, subgraphs = 0, triple_count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto ents = retrieved_entities(per_pair[i]);
    entities.insert(ents.begin(), ents.end());
    ent_posts += static_cast<double>(ents.size());
    ent_resp += static_cast<double>(
        used_entities(normalize_tokens(pairs[i].response), per_pair[i]));
    subgraphs += static_cast<double>(per_pair[i].size());
    for (const Subgraph &g : per_pair[i]) {
      triple_count += static_cast<double>(g.triples.size());
      triples.insert(g.triples.begin(), g.triples.end());
    }
  }
  s.retrieved_entities = entities.size();
  s.retrieved_triples = triples.size();
  if (!pairs.empty()) {
    const double n = static_cast<double>(pairs.size());
    s.avg_entities_in_posts = ent_posts / n;
    s.avg_entities_in_responses = ent_resp / n;
    s.avg_subgraphs_per_pair = subgraphs / n;
    s.avg_triples_per_pair = triple_count / n;
  }
  return s;
}

std::string format_stats_text(const PrepareStats &s) {
  std::string out;
  auto row = [&](const char *k, const std::string &v) { out += fmt::format("{:<28}{}\n", k, v); };
  row("pairs", std::to_string(s.pairs));
  row("vocab_size", std::to_string(s.vocab_size));
  row("kb_triples", std::to_string(s.kb_triples));
  row("retrieved_entities", std::to_string(s.retrieved_entities));
  row("retrieved_triples", std::to_string(s.retrieved_triples));
  row("avg_entities_in_posts", fmt::format("{:.2f}", s.avg_entities_in_posts));
  row("avg_entities_in_responses", fmt::format("{:.2f}", s.avg_entities_in_responses));
  row("avg_subgraphs_per_pair", fmt::format("{:.2f}", s.avg_subgraphs_per_pair));
  row("avg_triples_per_pair", fmt::format("{:.2f}", s.avg_triples_per_pair));
  return out;
}

std::string format_stats_json(const PrepareStats &s) {
  nlohmann::ordered_json j;
  j["pairs"] = s.pairs;
  j["vocab_size"] = s.vocab_size;
  j["kb_triples"] = s.kb_triples;
  j["retrieved_entities"] = s.retrieved_entities;
  j["retrieved_triples"] = s.retrieved_triples;
  j["avg_entities_in_posts"] = s.avg_entities_in_posts;
  j["avg_entities_in_responses"] = s.avg_entities_in_responses;
  j["avg_subgraphs_per_pair"] = s.avg_subgraphs_per_pair;
  j["avg_triples_per_pair"] = s.avg_triples_per_pair;
  return j.dump();
}

void write_subgraph_cache(std::ostream &out,
                          const std::vector<std::vector<Subgraph>> &per_pair) {
  for (std::size_t i = 0; i < per_pair.size(); ++i) {
    nlohmann::ordered_json line;
    line["pair_id"] = i;
    line["subgraphs"] = nlohmann::ordered_json::array();
    for (const Subgraph &g : per_pair[i]) {
      nlohmann::ordered_json sg;
      sg["mention"] = g.mention.surface;
      sg["positions"] = g.mention.positions;
      sg["triples"] = nlohmann::ordered_json::array();
      for (const Triple &t : g.triples) sg["triples"].push_back({t.head, t.relation, t.tail});
      line["subgraphs"].push_back(std::move(sg));
    }
    out << line.dump() << '\n';
  }
}

std::vector<std::vector<Subgraph>> read_subgraph_cache(std::istream &in) {
  std::vector<std::vector<Subgraph>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::vector<Subgraph> pair;
      for (const auto &sg : j.at("subgraphs")) {
        Subgraph g;
        g.mention.surface = sg.at("mention").get<std::string>();
        g.mention.positions = sg.at("positions").get<std::vector<std::size_t>>();
        for (const auto &t : sg.at("triples")) {
          if (t.size() != 3) throw MalformedLine(line_no, "triple needs 3 fields");
          g.triples.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                               t[2].get<std::string>()});
        }
        pair.push_back(std::move(g));
      }
      out.push_back(std::move(pair));
    } catch (const nlohmann::json::exception &e) {
      throw MalformedLine(line_no, e.what());
    }
  }
  return out;
}

std::vector<std::vector<Subgraph>> retrieve_all(const std::vector<DialoguePair> &pairs,
                                                const KnowledgeBase &kb,
                                                const RetrievalConfig &cfg) {
  std::vector<std::vector<Subgraph>> out;
  out.reserve(pairs.size());
  for (const DialoguePair &p : pairs) out.push_back(retrieve(p.post, kb, cfg));
  return out;
}

namespace {

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

}  // namespace

PrepareResult prepare_workdir(const std::string &kb_path, const std::string &corpus_path,
                              const std::string &workdir, const RetrievalConfig &cfg) {
  KnowledgeBase kb = load_triples_file(kb_path);
  std::vector<DialoguePair> pairs = load_corpus_file(corpus_path);
  const auto tokens = corpus_tokens(pairs);
  PrepareResult r{build_vocabulary(tokens, kb), retrieve_all(pairs, kb, cfg), {}};
  r.stats = compute_stats(pairs, r.subgraphs, r.vocab.size(), kb.size());

  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + workdir + ": " + ec.message());
  const WorkdirPaths p = WorkdirPaths::of(workdir);
  r.vocab.save_file(p.vocab);
  {
    auto out = open_out(p.kb);
    write_triples(out, kb.triples());
  }
  {
    auto out = open_out(p.corpus);
    write_corpus(out, pairs);
  }
  {
    auto out = open_out(p.subgraphs);
    write_subgraph_cache(out, r.subgraphs);
  }
  {
    auto out = open_out(p.stats);
    out << format_stats_json(r.stats) << '\n';
  }
  spdlog::info("prepared {} pairs, |V|={}", r.stats.pairs, r.stats.vocab_size);
  return r;
}

TrainReport train_workdir(const RunConfig &cfg, std::ostream *log, std::string *model_path) {
  const WorkdirPaths p = WorkdirPaths::of(cfg.workdir);
  Vocabulary v = Vocabulary::load_file(p.vocab);
  std::vector<DialoguePair> pairs = load_corpus_file(cfg.corpus.empty() ? p.corpus : cfg.corpus);
  std::optional<KnowledgeBase> kb;
  if (cfg.model.ablation != Ablation::kNoKg) {
    kb.emplace(load_triples_file(cfg.kb.empty() ? p.kb : cfg.kb));
  }
  compute::set_precision(cfg.model.precision == 32 ? compute::Precision::k32
                                                   : compute::Precision::k64);
  Model model(cfg.model, v.size(), cfg.seed);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  if (tcfg.checkpoint_dir.empty()) tcfg.checkpoint_dir = p.checkpoints;
  auto examples = prepare_examples(pairs, kb ? &*kb : nullptr, v, cfg.model);
  spdlog::info("training {} on {} examples, {} parameters", ablation_name(cfg.model.ablation),
               examples.size(), model.params().scalar_count());
  TrainReport report = fit(examples, v, model, tcfg, log);
  const std::string out = cfg.checkpoint.empty() ? p.model : cfg.checkpoint;
  save_checkpoint(out, model, v, tcfg, report.epochs.empty() ? 0 : report.epochs.back().epoch);
  if (model_path) *model_path = out;
  return report;
}

void export_embeddings(std::ostream &out, const Model &model, const Vocabulary &v) {
  const compute::Tensor &emb = model.params().at("embedding");
  for (std::size_t id = 0; id < v.size(); ++id) {
    out << v.piece(static_cast<TokenId>(id)) << '\t';
    for (std::size_t c = 0; c < emb.cols(); ++c) {
      if (c > 0) out << ' ';
      out << fmt::format("{}", emb(id, c));
    }
    out << '\n';
  }
}

}  // namespace kgdial
