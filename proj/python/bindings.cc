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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "kgdial/checkpoint.h"
#include "kgdial/cli.h"
#include "kgdial/errors.h"
#include "kgdial/metrics.h"
#include "kgdial/model.h"
#include "kgdial/pipeline.h"
#include "kgdial/synthdata.h"
#include "kgdial/text.h"

namespace py = pybind11;

namespace kgdial {
namespace {

py::object from_json(const std::string &text) {
  return py::module_::import("json").attr("loads")(text);
}

py::list subgraphs_to_py(const std::vector<Subgraph> &subgraphs) {
  py::list out;
  for (const Subgraph &g : subgraphs) {
    py::list triples;
    for (const Triple &t : g.triples) triples.append(py::make_tuple(t.head, t.relation, t.tail));
    py::dict d;
    d["mention"] = g.mention.surface;
    d["positions"] = g.mention.positions;
    d["triples"] = triples;
    out.append(d);
  }
  return out;
}

std::vector<Sentence> to_sentences(const std::vector<std::string> &lines) {
  return tokenize_sentences(lines);
}

Decoding decoding_of(const std::string &kind, std::size_t beam_size) {
  Decoding d;
  if (kind == "beam") {
    d.kind = Decoding::Kind::kBeam;
  } else if (kind != "greedy") {
    throw Error(ErrorCode::kInvalidArgument, "decoding must be greedy or beam");
  }
  d.beam_size = beam_size;
  return d;
}

// A loaded checkpoint with its vocabulary.
class Generator {
 public:
  Generator(const std::string &checkpoint, const std::string &workdir)
      : vocab_(Vocabulary::load_file(WorkdirPaths::of(workdir).vocab)) {
    CheckpointData meta;
    model_ = std::make_unique<Model>(load_model(checkpoint, vocab_, &meta));
    precision_ = meta.model_config.precision;
  }

  std::string generate(const std::string &post, const KnowledgeBase *kb,
                       const std::string &decoding, std::size_t beam_size, std::size_t max_new) {
    compute::set_precision(precision_ == 32 ? compute::Precision::k32 : compute::Precision::k64);
    return generate_response(post, kb, vocab_, *model_, decoding_of(decoding, beam_size), max_new);
  }

  std::string ablation() const { return ablation_name(model_->config().ablation); }
  void set_ablation(const std::string &name) { model_->set_ablation(parse_ablation(name)); }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t parameter_count() const { return model_->params().scalar_count(); }

 private:
  Vocabulary vocab_;
  std::unique_ptr<Model> model_;
  int precision_ = 64;
};

}  // namespace
}  // namespace kgdial

PYBIND11_MODULE(_core, m) {
  using namespace kgdial;
  m.doc() = "Knowledge-grounded dialogue generation with pseudo-node graph aggregation";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error &e) {
      error(e.what());
    }
  });

  py::class_<KnowledgeBase>(m, "KnowledgeBase")
      .def(py::init([](const std::vector<std::tuple<std::string, std::string, std::string>> &ts) {
             std::vector<Triple> triples;
             for (const auto &[h, r, t] : ts) triples.push_back({h, r, t});
             return KnowledgeBase(std::move(triples));
           }),
           py::arg("triples"))
      .def_static("load", [](const std::string &path) { return load_triples_file(path); })
      .def("__len__", &KnowledgeBase::size)
      .def("has_concept", &KnowledgeBase::has_concept)
      .def(
          "retrieve",
          [](const KnowledgeBase &kb, const std::string &post) {
            return subgraphs_to_py(retrieve(post, kb, {}));
          },
          py::arg("post"))
      .def("lookup_count", &KnowledgeBase::lookup_count);

  py::class_<Generator>(m, "Generator")
      .def(py::init<const std::string &, const std::string &>(), py::arg("checkpoint"),
           py::arg("workdir"))
      .def(
          "generate",
          [](Generator &g, const std::string &post, const KnowledgeBase *kb,
             const std::string &decoding, std::size_t beam_size, std::size_t max_new) {
            return g.generate(post, kb, decoding, beam_size, max_new);
          },
          py::arg("post"), py::arg("kb") = nullptr, py::arg("decoding") = "greedy",
          py::arg("beam_size") = 4, py::arg("max_new") = 32)
      .def_property("ablation", &Generator::ablation, &Generator::set_ablation)
      .def_property_readonly("vocab_size", &Generator::vocab_size)
      .def_property_readonly("parameter_count", &Generator::parameter_count);

  m.def(
      "synthesize",
      [](const std::string &out_dir, std::size_t n_pairs, std::uint64_t seed) {
        SynthSpec spec;
        spec.n_pairs = n_pairs;
        spec.seed = seed;
        SynthData d = generate_synthdata(spec);
        write_synthdata(d, out_dir);
        py::list manifest;
        for (const ManifestEntry &e : d.manifest) manifest.append(py::make_tuple(e.pair_id, e.gold_entity));
        return manifest;
      },
      py::arg("out_dir"), py::arg("n_pairs") = 32, py::arg("seed") = 42,
      "Writes kb.tsv, corpus.jsonl and manifest.jsonl; returns (pair_id, gold_entity) pairs.");

  m.def(
      "prepare",
      [](const std::string &kb, const std::string &corpus, const std::string &workdir) {
        return from_json(format_stats_json(prepare_workdir(kb, corpus, workdir, {}).stats));
      },
      py::arg("kb"), py::arg("corpus"), py::arg("workdir"));

  m.def(
      "train",
      [](const std::string &workdir, const std::map<std::string, std::string> &settings) {
        RunConfig cfg;
        cfg.workdir = workdir;
        for (const auto &[k, v] : settings) apply_setting(cfg, k, v);
        TrainReport report;
        {
          py::gil_scoped_release release;
          report = train_workdir(cfg);
        }
        std::vector<double> losses;
        for (const EpochStats &e : report.epochs) losses.push_back(e.mean_loss);
        return losses;
      },
      py::arg("workdir"), py::arg("settings") = std::map<std::string, std::string>{},
      "Trains on a prepared workdir; settings use the config-file keys. Returns epoch losses.");

  m.def(
      "bleu",
      [](const std::vector<std::string> &hyps, const std::vector<std::string> &refs,
         std::size_t n) { return bleu(to_sentences(hyps), to_sentences(refs), n); },
      py::arg("hyps"), py::arg("refs"), py::arg("n") = 4);
  m.def(
      "nist",
      [](const std::vector<std::string> &hyps, const std::vector<std::string> &refs,
         std::size_t n) { return nist(to_sentences(hyps), to_sentences(refs), n); },
      py::arg("hyps"), py::arg("refs"), py::arg("n") = 4);
  m.def(
      "meteor",
      [](const std::vector<std::string> &hyps, const std::vector<std::string> &refs) {
        return meteor_lite(to_sentences(hyps), to_sentences(refs));
      },
      py::arg("hyps"), py::arg("refs"));
  m.def(
      "distinct",
      [](const std::vector<std::string> &hyps, std::size_t n) {
        return distinct_n(to_sentences(hyps), n);
      },
      py::arg("hyps"), py::arg("n"));
  m.def(
      "entropy",
      [](const std::vector<std::string> &hyps, std::size_t n) {
        return entropy_n(to_sentences(hyps), n);
      },
      py::arg("hyps"), py::arg("n") = 4);
  m.def(
      "evaluate",
      [](const std::vector<std::string> &hyps, const std::vector<std::string> &refs) {
        return from_json(format_report_json(evaluate(to_sentences(hyps), to_sentences(refs))));
      },
      py::arg("hyps"), py::arg("refs"));

  m.def(
      "run_cli",
      [](const std::vector<std::string> &args, const std::string &input) {
        std::vector<std::string> all = {"kgdial"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<const char *> argv;
        for (const std::string &a : all) argv.push_back(a.c_str());
        std::istringstream in(input);
        std::ostringstream out, err;
        const int code = dispatch(static_cast<int>(argv.size()), argv.data(), in, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), py::arg("input") = "",
      "Runs one command in-process; returns (exit_code, stdout, stderr).");
}
