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

#include "kgdial/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgdial/checkpoint.h"
#include "kgdial/config.h"
#include "kgdial/errors.h"
#include "kgdial/metrics.h"
#include "kgdial/pipeline.h"
#include "kgdial/synthdata.h"
#include "kgdial/text.h"

namespace kgdial {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string kb, corpus, workdir, config, checkpoint, out, post, hyps, refs;
  // Typed settings are kept as text and go through apply_setting.
  std::string ablation, decoding, beam_size, max_new, seed, precision;
  std::size_t pairs = 32, concepts = 60, triples = 60;
};

void add_model_flags(CLI::App *c, Flags &f) {
  c->add_option("--ablation", f.ablation, "full, no_dy_agg, no_st_agg or no_kg")
      ->check(CLI::IsMember({"full", "no_dy_agg", "no_st_agg", "no_kg"}));
  c->add_option("--precision", f.precision, "32 or 64")->check(CLI::IsMember({"32", "64"}));
  c->add_option("--seed", f.seed)->check(CLI::NonNegativeNumber);
}

void add_decoding_flags(CLI::App *c, Flags &f) {
  c->add_option("--decoding", f.decoding)->check(CLI::IsMember({"greedy", "beam"}));
  c->add_option("--beam-size", f.beam_size)->check(CLI::PositiveNumber);
  c->add_option("--max-new", f.max_new)->check(CLI::NonNegativeNumber);
}

CLI::Option *add_existing(CLI::App *c, const std::string &name, std::string &target,
                          const std::string &help) {
  return c->add_option(name, target, help)->check(CLI::ExistingFile);
}

RunConfig run_config(const Flags &f) {
  RunConfig cfg;
  if (!f.config.empty()) load_config_file(cfg, f.config);
  const std::pair<const char *, const std::string *> typed[] = {
      {"ablation", &f.ablation}, {"decoding", &f.decoding},   {"beam_size", &f.beam_size},
      {"max_new", &f.max_new},   {"seed", &f.seed},           {"precision", &f.precision},
  };
  for (const auto &[key, value] : typed) {
    if (!value->empty()) apply_setting(cfg, key, *value);
  }
  if (!f.kb.empty()) cfg.kb = f.kb;
  if (!f.corpus.empty()) cfg.corpus = f.corpus;
  if (!f.workdir.empty()) cfg.workdir = f.workdir;
  if (!f.checkpoint.empty()) cfg.checkpoint = f.checkpoint;
  cfg.train.seed = cfg.seed;
  return cfg;
}

void use_precision(int bits) {
  compute::set_precision(bits == 32 ? compute::Precision::k32 : compute::Precision::k64);
}

std::string require(const std::string &value, const char *flag) {
  if (value.empty()) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("{} is required", flag));
  }
  return value;
}

// KB from --kb, or the copy in the workdir when there is one.
std::unique_ptr<KnowledgeBase> find_kb(const RunConfig &cfg) {
  std::string path = cfg.kb;
  if (path.empty() && !cfg.workdir.empty()) {
    const std::string candidate = WorkdirPaths::of(cfg.workdir).kb;
    if (fs::exists(candidate)) path = candidate;
  }
  if (path.empty()) return nullptr;
  return std::make_unique<KnowledgeBase>(load_triples_file(path));
}

struct Session {
  Vocabulary vocab;
  Model model;
  std::unique_ptr<KnowledgeBase> kb;
};

Session open_session(const Flags &f, const RunConfig &cfg) {
  Vocabulary v = Vocabulary::load_file(WorkdirPaths::of(require(cfg.workdir, "--workdir")).vocab);
  CheckpointData meta;
  Model model = load_model(require(cfg.checkpoint, "--checkpoint"), v, &meta);
  use_precision(f.precision.empty() ? meta.model_config.precision : cfg.model.precision);
  if (!f.ablation.empty()) model.set_ablation(cfg.model.ablation);
  std::unique_ptr<KnowledgeBase> kb;
  if (model.config().ablation != Ablation::kNoKg) {
    kb = find_kb(cfg);
    if (!kb) throw Error(ErrorCode::kInvalidArgument, "--kb is required for this ablation");
  }
  return {std::move(v), std::move(model), std::move(kb)};
}

Generation run_generate(const Session &s, const RunConfig &cfg, const std::string &post) {
  return generate(post, s.kb.get(), s.vocab, s.model, cfg.decoding, cfg.max_new);
}

std::vector<std::string> read_lines(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool is_jsonl(const std::string &path) { return fs::path(path).extension() == ".jsonl"; }

// Writes to --out when given, otherwise to the output stream.
class Sink {
 public:
  Sink(const std::string &path, std::ostream &fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::kIo, "cannot write " + path);
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream &operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream *stream_;
};

void print_subgraphs(std::ostream &out, const std::vector<Subgraph> &subgraphs) {
  if (subgraphs.empty()) {
    out << "(no subgraphs)\n";
    return;
  }
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    out << 'g' << i << " mention=" << subgraphs[i].mention.surface << '\n';
    for (const Triple &t : subgraphs[i].triples) {
      out << "  " << t.head << ' ' << t.relation << ' ' << t.tail << '\n';
    }
  }
}

// --- subcommands ------------------------------------------------------------

int cmd_prepare(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  PrepareResult r = prepare_workdir(cfg.kb, cfg.corpus, cfg.workdir, cfg.model.retrieval);
  out << format_stats_text(r.stats);
  return kExitOk;
}

int cmd_train(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  cfg.model.validate();
  cfg.train.validate();
  std::string model_path;
  TrainReport report = train_workdir(cfg, &out, &model_path);
  out << "checkpoint\t" << model_path << '\n';
  spdlog::info("{} epochs, final loss {:.6f}", report.epochs.size(),
               report.epochs.empty() ? 0.0 : report.epochs.back().mean_loss);
  return kExitOk;
}

int cmd_generate(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  if (f.post.empty() && cfg.corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "either --post or --corpus is required");
  }
  Session s = open_session(f, cfg);
  Sink sink(f.out, out);
  if (!f.post.empty()) {
    *sink << run_generate(s, cfg, f.post).text << '\n';
  } else {
    for (const DialoguePair &p : load_corpus_file(cfg.corpus)) {
      *sink << run_generate(s, cfg, p.post).text << '\n';
    }
  }
  return kExitOk;
}

struct References {
  std::vector<std::string> posts;  // empty for plain-text references
  std::vector<std::string> responses;
};

References load_references(const std::string &path) {
  References r;
  if (is_jsonl(path)) {
    for (DialoguePair &p : load_corpus_file(path)) {
      r.posts.push_back(std::move(p.post));
      r.responses.push_back(std::move(p.response));
    }
  } else {
    r.responses = read_lines(path);
  }
  return r;
}

std::vector<std::vector<Subgraph>> retrieve_posts(const std::vector<std::string> &posts,
                                                  const KnowledgeBase &kb,
                                                  const RetrievalConfig &cfg) {
  std::vector<std::vector<Subgraph>> out;
  for (const std::string &p : posts) out.push_back(retrieve(p, kb, cfg));
  return out;
}

int cmd_eval(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  const auto hyps = tokenize_sentences(read_lines(f.hyps));
  References refs = load_references(f.refs);
  std::optional<std::vector<std::vector<Subgraph>>> per_post;
  if (!refs.posts.empty()) {
    if (auto kb = find_kb(cfg)) per_post = retrieve_posts(refs.posts, *kb, cfg.model.retrieval);
  }
  EvalReport report =
      evaluate(hyps, tokenize_sentences(refs.responses), per_post ? &*per_post : nullptr);
  out << format_report_text(report) << format_report_json(report) << '\n';
  return kExitOk;
}

int cmd_analyze(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  const std::string corpus_path =
      !cfg.corpus.empty() ? cfg.corpus
                          : WorkdirPaths::of(require(cfg.workdir, "--corpus or --workdir")).corpus;
  std::vector<DialoguePair> pairs = load_corpus_file(corpus_path);
  std::vector<std::string> posts;
  for (const DialoguePair &p : pairs) posts.push_back(p.post);

  std::vector<std::string> hyp_lines;
  std::unique_ptr<KnowledgeBase> kb;
  if (!f.hyps.empty()) {
    hyp_lines = read_lines(f.hyps);
    kb = find_kb(cfg);
  } else {
    Session s = open_session(f, cfg);
    for (const std::string &p : posts) hyp_lines.push_back(run_generate(s, cfg, p).text);
    kb = s.kb ? std::move(s.kb) : find_kb(cfg);
  }
  if (!kb) throw Error(ErrorCode::kInvalidArgument, "--kb is required");
  KnowledgeUsage usage = knowledge_incorporation(
      tokenize_sentences(hyp_lines), retrieve_posts(posts, *kb, cfg.model.retrieval));

  nlohmann::ordered_json j;
  j["mean_used"] = usage.mean_used;
  j["examples"] = posts.size();
  j["curve"] = nlohmann::ordered_json::array();
  out << fmt::format("{:<20}{:<10}{}\n", "retrieved_entities", "examples", "mean_used");
  for (const auto &[count, bucket] : usage.curve) {
    out << fmt::format("{:<20}{:<10}{:.4f}\n", count, bucket.examples, bucket.mean_used);
    j["curve"].push_back(
        {{"retrieved_entities", count}, {"examples", bucket.examples}, {"mean_used", bucket.mean_used}});
  }
  out << fmt::format("{:<20}{:<10}{:.4f}\n", "all", posts.size(), usage.mean_used);
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_chat(const Flags &f, std::istream &in, std::ostream &out) {
  RunConfig cfg = run_config(f);
  Session s = open_session(f, cfg);
  std::vector<Subgraph> last;
  std::string line;
  while (std::getline(in, line)) {
    const std::string turn = join(split_whitespace(line), " ");
    if (turn.empty()) continue;
    if (turn == ":quit") return kExitOk;
    if (turn == ":kb") {
      print_subgraphs(out, last);
      out << std::flush;
      continue;
    }
    Generation g = run_generate(s, cfg, turn);
    last = std::move(g.subgraphs);
    out << g.text << '\n' << std::flush;
  }
  return kExitOk;
}

int cmd_export(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  Vocabulary v = Vocabulary::load_file(WorkdirPaths::of(require(cfg.workdir, "--workdir")).vocab);
  Model model = load_model(require(cfg.checkpoint, "--checkpoint"), v);
  Sink sink(f.out, out);
  export_embeddings(*sink, model, v);
  return kExitOk;
}

int cmd_dump_graph(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  Vocabulary v = Vocabulary::load_file(WorkdirPaths::of(require(cfg.workdir, "--workdir")).vocab);
  std::optional<Model> model;
  if (!cfg.checkpoint.empty()) {
    model.emplace(load_model(cfg.checkpoint, v));
  } else {
    model.emplace(cfg.model, v.size(), cfg.seed);
  }
  std::unique_ptr<KnowledgeBase> kb = find_kb(cfg);
  if (!kb) throw Error(ErrorCode::kInvalidArgument, "--kb is required");
  PseudoGraph graph =
      model->build_graph(retrieve(f.post, *kb, model->config().retrieval), v);
  dump_graph(out, graph);
  return kExitOk;
}

int cmd_synth(const Flags &f, std::ostream &out) {
  RunConfig cfg = run_config(f);
  SynthSpec spec;
  spec.seed = cfg.seed;
  spec.n_pairs = f.pairs;
  spec.n_concepts = f.concepts;
  spec.n_triples = f.triples;
  SynthData data = generate_synthdata(spec);
  write_synthdata(data, cfg.workdir);
  out << fmt::format("{} triples, {} pairs written to {}\n", data.triples.size(),
                     data.pairs.size(), cfg.workdir);
  return kExitOk;
}

int run(int argc, const char *const *argv, std::istream &in, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Knowledge-grounded dialogue generation with pseudo-node graph aggregation",
               "kgdial"};
  app.require_subcommand(1);
  Flags f;

  auto *prepare = app.add_subcommand("prepare", "Build vocabulary, subgraph cache and stats");
  add_existing(prepare, "--kb", f.kb, "Triples TSV")->required();
  add_existing(prepare, "--corpus", f.corpus, "Dialogue JSONL")->required();
  prepare->add_option("--workdir,--out", f.workdir, "Output directory")->required();
  add_existing(prepare, "--config", f.config, "key = value settings");

  auto *train = app.add_subcommand("train", "Train on a prepared workdir");
  train->add_option("--workdir", f.workdir)->required()->check(CLI::ExistingDirectory);
  add_existing(train, "--config", f.config, "key = value settings");
  add_existing(train, "--kb", f.kb, "Override the workdir KB");
  add_existing(train, "--corpus", f.corpus, "Override the workdir corpus");
  train->add_option("--checkpoint", f.checkpoint, "Final model path");
  add_model_flags(train, f);

  auto *gen = app.add_subcommand("generate", "Generate responses");
  gen->add_option("--workdir", f.workdir)->required()->check(CLI::ExistingDirectory);
  add_existing(gen, "--checkpoint", f.checkpoint, "Model checkpoint")->required();
  add_existing(gen, "--kb", f.kb, "Triples TSV");
  add_existing(gen, "--corpus", f.corpus, "Posts to answer, one JSON object per line");
  add_existing(gen, "--config", f.config, "key = value settings");
  gen->add_option("--post", f.post, "A single post");
  gen->add_option("--out", f.out, "Write responses here instead of stdout");
  add_model_flags(gen, f);
  add_decoding_flags(gen, f);

  auto *eval = app.add_subcommand("eval", "Score hypotheses against references");
  add_existing(eval, "--hyps", f.hyps, "One hypothesis per line")->required();
  add_existing(eval, "--refs", f.refs, "References: JSONL corpus or one per line")->required();
  add_existing(eval, "--kb", f.kb, "Triples TSV for knowledge usage");
  eval->add_option("--workdir", f.workdir)->check(CLI::ExistingDirectory);
  add_existing(eval, "--config", f.config, "key = value settings");

  auto *analyze =
      app.add_subcommand("analyze-knowledge", "Used entities bucketed by retrieved entities");
  add_existing(analyze, "--hyps", f.hyps, "One hypothesis per line");
  add_existing(analyze, "--corpus", f.corpus, "Posts, one JSON object per line");
  add_existing(analyze, "--kb", f.kb, "Triples TSV");
  add_existing(analyze, "--checkpoint", f.checkpoint, "Generate hypotheses with this model");
  analyze->add_option("--workdir", f.workdir)->check(CLI::ExistingDirectory);
  add_existing(analyze, "--config", f.config, "key = value settings");
  add_model_flags(analyze, f);
  add_decoding_flags(analyze, f);

  auto *chat = app.add_subcommand("chat", "Interactive session; :kb shows retrieval, :quit exits");
  chat->add_option("--workdir", f.workdir)->required()->check(CLI::ExistingDirectory);
  add_existing(chat, "--checkpoint", f.checkpoint, "Model checkpoint")->required();
  add_existing(chat, "--kb", f.kb, "Triples TSV");
  add_existing(chat, "--config", f.config, "key = value settings");
  add_model_flags(chat, f);
  add_decoding_flags(chat, f);

  auto *exp = app.add_subcommand("export-embeddings", "Write the embedding table");
  exp->add_option("--workdir", f.workdir)->required()->check(CLI::ExistingDirectory);
  add_existing(exp, "--checkpoint", f.checkpoint, "Model checkpoint")->required();
  exp->add_option("--out", f.out, "Output file");

  auto *dump = app.add_subcommand("dump-graph", "Print the pseudo graph for a post");
  dump->add_option("--workdir", f.workdir)->required()->check(CLI::ExistingDirectory);
  dump->add_option("--post", f.post)->required();
  add_existing(dump, "--kb", f.kb, "Triples TSV");
  add_existing(dump, "--checkpoint", f.checkpoint, "Model checkpoint");
  add_existing(dump, "--config", f.config, "key = value settings");
  add_model_flags(dump, f);

  auto *synth = app.add_subcommand("synth", "Write a synthetic KB, corpus and manifest");
  synth->add_option("--workdir,--out", f.workdir, "Output directory")->required();
  synth->add_option("--pairs", f.pairs)->check(CLI::PositiveNumber);
  synth->add_option("--concepts", f.concepts)->check(CLI::PositiveNumber);
  synth->add_option("--triples", f.triples)->check(CLI::PositiveNumber);
  synth->add_option("--seed", f.seed)->check(CLI::NonNegativeNumber);

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "kgdial: unknown command '" << argv[1] << "'\n";
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "kgdial: " << e.what() << '\n';
    return kExitUsage;
  }

  if (*prepare) return cmd_prepare(f, out);
  if (*train) return cmd_train(f, out);
  if (*gen) return cmd_generate(f, out);
  if (*eval) return cmd_eval(f, out);
  if (*analyze) return cmd_analyze(f, out);
  if (*chat) return cmd_chat(f, in, out);
  if (*exp) return cmd_export(f, out);
  if (*dump) return cmd_dump_graph(f, out);
  return cmd_synth(f, out);
}

}  // namespace

int exit_code_for(const std::exception &e) {
  if (const auto *k = dynamic_cast<const Error *>(&e)) {
    if (k->code() == ErrorCode::kInvalidArgument) return kExitUsage;
    return k->is_data_error() ? kExitData : kExitRuntime;
  }
  return kExitRuntime;
}

void configure_logging() {
  auto logger = spdlog::get("kgdial");
  if (!logger) {
    logger = spdlog::stderr_logger_mt("kgdial");
    spdlog::set_default_logger(logger);
  }
  const char *env = std::getenv("KGDIAL_LOG");
  const std::string level = env ? env : "info";
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

int dispatch(int argc, const char *const *argv, std::istream &in, std::ostream &out,
             std::ostream &err) {
  configure_logging();
  try {
    return run(argc, argv, in, out, err);
  } catch (const std::exception &e) {
    err << "kgdial: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace kgdial
