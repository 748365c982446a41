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

#include "kgdial/trainer.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gtest/gtest.h"
#include "kgdial/checkpoint.h"
#include "kgdial/errors.h"
#include "kgdial/synthdata.h"

namespace kgdial {
namespace {

namespace fs = std::filesystem;
using compute::Tensor;

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.triple_width = 4;
  cfg.enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.heads = 2;
  cfg.max_seq_len = 16;
  return cfg;
}

struct Toy {
  KnowledgeBase kb{{{"coffee", "RelatedTo", "milk"},
                    {"milk", "IsA", "drink"},
                    {"tea", "IsA", "drink"},
                    {"dog", "IsA", "animal"}}};
  std::vector<DialoguePair> pairs = {{"i like milk", "milk is a drink"},
                                     {"my dog barks", "a dog is an animal"},
                                     {"tea please", "tea is a drink"},
                                     {"coffee time", "coffee goes with milk"}};
  Vocabulary v;
  Toy() {
    v = build_vocabulary(corpus_tokens(pairs), kb);
  }
};

fs::path temp_dir(const std::string &name) {
  fs::path dir = fs::temp_directory_path() / ("kgdial_trainer_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<double>> values_of(const Parameters &p) {
  std::vector<std::vector<double>> out;
  for (const auto &t : p.all()) out.emplace_back(t.tensor.data().begin(), t.tensor.data().end());
  return out;
}

TEST(Adam, FirstStepOnQuadratic) {
  Parameters params;
  params.add("theta", Tensor::from(1, 1, {1.0}));
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  Adam adam(params, cfg);
  Tensor theta = params.at("theta");
  compute::backward(compute::mul(theta, theta));
  adam.step();
  // m_hat = 2, v_hat = 4 after bias correction.
  const double expected = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
  EXPECT_NEAR(theta.data()[0], expected, 1e-12);
  EXPECT_NEAR(theta.data()[0] - 1.0, -0.1, 1e-6);
}

TEST(Adam, SecondStepMatchesClosedForm) {
  Parameters params;
  params.add("theta", Tensor::from(1, 1, {1.0}));
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  Adam adam(params, cfg);
  Tensor theta = params.at("theta");
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 2; ++t) {
    params.zero_grad();
    compute::backward(compute::mul(theta, theta));
    adam.step();
    const double g = 2 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_NEAR(theta.data()[0], x, 1e-12);
}

TEST(ClipGradNorm, ScalesToBound) {
  Parameters params;
  params.add("a", Tensor::from(1, 2, {0, 0}));
  params.add("b", Tensor::from(1, 1, {0}));
  params.at("a").mutable_grad()[0] = 3.0;
  params.at("a").mutable_grad()[1] = 0.0;
  params.at("b").mutable_grad()[0] = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_LE(grad_norm(params), 1.0 + 1e-9);
  EXPECT_NEAR(params.at("a").grad()[0], 0.6, 1e-12);
}

TEST(ClipGradNorm, SmallNormUntouched) {
  Parameters params;
  params.add("a", Tensor::from(1, 1, {0}));
  params.at("a").mutable_grad()[0] = 0.5;
  clip_grad_norm(params, 1.0);
  EXPECT_EQ(params.at("a").grad()[0], 0.5);
}

TEST(PrepareExamples, EncodesAndRetrieves) {
  Toy toy;
  auto ex = prepare_examples(toy.pairs, &toy.kb, toy.v, tiny_config());
  ASSERT_EQ(ex.size(), 4u);
  EXPECT_EQ(ex[0].post.ids.back(), Vocabulary::kEos);
  EXPECT_EQ(ex[0].response.ids.front(), Vocabulary::kBos);
  EXPECT_FALSE(ex[0].subgraphs.empty());
  ModelConfig no_kg = tiny_config();
  no_kg.ablation = Ablation::kNoKg;
  EXPECT_TRUE(prepare_examples(toy.pairs, &toy.kb, toy.v, no_kg)[0].subgraphs.empty());
}

TEST(PrepareExamples, TruncatesLongSequences) {
  Toy toy;
  std::string long_text;
  for (int i = 0; i < 40; ++i) long_text += "milk ";
  auto ex = prepare_examples({{long_text, long_text}}, &toy.kb, toy.v, tiny_config());
  EXPECT_EQ(ex[0].post.length(), 15u);
  EXPECT_EQ(ex[0].post.ids.back(), Vocabulary::kEos);
  EXPECT_EQ(ex[0].response.length(), 17u);
  EXPECT_EQ(ex[0].response.ids.back(), Vocabulary::kEos);
}

TEST(Fit, ZeroLearningRateLeavesParametersUnchanged) {
  Toy toy;
  Model m(tiny_config(), toy.v.size(), 1);
  auto before = values_of(m.params());
  TrainConfig tcfg;
  tcfg.learning_rate = 0.0;
  tcfg.epochs = 1;
  tcfg.batch_size = 2;
  fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg);
  EXPECT_EQ(values_of(m.params()), before);
}

TEST(Fit, SeededRunsAreIdentical) {
  Toy toy;
  auto run = [&] {
    Model m(tiny_config(), toy.v.size(), 42);
    TrainConfig tcfg;
    tcfg.learning_rate = 1e-2;
    tcfg.epochs = 3;
    tcfg.batch_size = 2;
    std::vector<double> losses;
    for (const auto &e :
         fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg).epochs) {
      losses.push_back(e.mean_loss);
    }
    return losses;
  };
  EXPECT_EQ(run(), run());
}

TEST(Fit, LossDecreases) {
  Toy toy;
  Model m(tiny_config(), toy.v.size(), 42);
  TrainConfig tcfg;
  tcfg.learning_rate = 1e-2;
  tcfg.epochs = 4;
  tcfg.batch_size = 4;
  auto report = fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg);
  ASSERT_EQ(report.epochs.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_LT(report.epochs[i].mean_loss, report.epochs[i - 1].mean_loss);
  }
}

TEST(Fit, DeskConfigOnSyntheticCorpusDecreases) {
  compute::set_precision(compute::Precision::k64);
  SynthData d = generate_synthdata(SynthSpec{});
  KnowledgeBase kb(d.triples);
  Vocabulary v = build_vocabulary(corpus_tokens(d.pairs), kb);
  Model m(ModelConfig{}, v.size(), 42);
  TrainConfig tcfg;
  tcfg.epochs = 3;
  auto report = fit(prepare_examples(d.pairs, &kb, v, m.config()), v, m, tcfg);
  ASSERT_EQ(report.epochs.size(), 3u);
  EXPECT_LT(report.epochs[1].mean_loss, report.epochs[0].mean_loss);
  EXPECT_LT(report.epochs[2].mean_loss, report.epochs[1].mean_loss);
}

TEST(Fit, SingleBatchLossIgnoresOrder) {
  Toy toy;
  Model m(tiny_config(), toy.v.size(), 3);
  auto examples = prepare_examples(toy.pairs, &toy.kb, toy.v, m.config());
  std::vector<const TrainingExample *> fwd, rev;
  for (const auto &e : examples) fwd.push_back(&e);
  rev.assign(fwd.rbegin(), fwd.rend());
  m.params().zero_grad();
  const double a = batch_loss_and_grad(fwd, toy.v, m);
  m.params().zero_grad();
  const double b = batch_loss_and_grad(rev, toy.v, m);
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(Fit, WritesLogAndCheckpoints) {
  Toy toy;
  fs::path dir = temp_dir("ckpts");
  Model m(tiny_config(), toy.v.size(), 42);
  TrainConfig tcfg;
  tcfg.learning_rate = 1e-3;
  tcfg.epochs = 5;
  tcfg.batch_size = 3;
  tcfg.checkpoint_dir = dir.string();
  tcfg.keep_checkpoints = 2;
  std::ostringstream log;
  auto report = fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg, &log);
  EXPECT_EQ(report.last_checkpoint, (dir / "epoch-0005.ckpt").string());
  EXPECT_TRUE(fs::exists(dir / "epoch-0005.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "epoch-0004.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "epoch-0003.ckpt"));
  std::istringstream lines(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    std::istringstream fields(line);
    std::size_t epoch;
    double loss, secs;
    char tab1, tab2;
    fields >> epoch >> std::noskipws >> tab1 >> std::skipws >> loss >> std::noskipws >> tab2 >>
        std::skipws >> secs;
    EXPECT_EQ(epoch, n);
    EXPECT_EQ(tab1, '\t');
    EXPECT_EQ(tab2, '\t');
    EXPECT_NEAR(loss, report.epochs[n - 1].mean_loss, 1e-6);
  }
  EXPECT_EQ(n, 5u);
  std::ifstream file_log(dir / "train.log");
  std::string first;
  std::getline(file_log, first);
  EXPECT_EQ(first.substr(0, 2), "1\t");
}

TEST(Fit, StopBelowEndsEarly) {
  Toy toy;
  Model m(tiny_config(), toy.v.size(), 42);
  TrainConfig tcfg;
  tcfg.epochs = 10;
  tcfg.stop_below = 1e9;
  auto report = fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg);
  EXPECT_EQ(report.epochs.size(), 1u);
}

TEST(Fit, DivergenceRestoresLastGoodEpoch) {
  Toy toy;
  Model m(tiny_config(), toy.v.size(), 42);
  TrainConfig tcfg;
  tcfg.learning_rate = 1e-3;
  tcfg.epochs = 3;
  std::vector<std::vector<double>> good;
  auto inject = [&](const EpochStats &) {
    good = values_of(m.params());
    m.params().at("lm_head.w_res").mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
    return true;
  };
  try {
    fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg, nullptr, inject);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergedLoss);
  }
  EXPECT_EQ(values_of(m.params()), good);
}

TEST(Fit, RejectsBadConfig) {
  Toy toy;
  Model m(tiny_config(), toy.v.size(), 42);
  TrainConfig tcfg;
  tcfg.batch_size = 0;
  EXPECT_THROW(fit(prepare_examples(toy.pairs, &toy.kb, toy.v, m.config()), toy.v, m, tcfg),
               Error);
  tcfg = TrainConfig();
  EXPECT_THROW(fit({}, toy.v, m, tcfg), Error);
}

TEST(Checkpoint, RoundTrip) {
  Toy toy;
  fs::path dir = temp_dir("roundtrip");
  ModelConfig cfg = tiny_config();
  cfg.ablation = Ablation::kNoStAgg;
  Model m(cfg, toy.v.size(), 9);
  TrainConfig tcfg;
  tcfg.learning_rate = 3e-3;
  tcfg.batch_size = 5;
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, m, toy.v, tcfg, 7);
  CheckpointData meta;
  Model loaded = load_model(path, toy.v, &meta);
  EXPECT_EQ(values_of(loaded.params()), values_of(m.params()));
  EXPECT_EQ(meta.epoch, 7u);
  EXPECT_EQ(meta.train_config.learning_rate, 3e-3);
  EXPECT_EQ(meta.train_config.batch_size, 5u);
  EXPECT_EQ(loaded.config().ablation, Ablation::kNoStAgg);
  EXPECT_EQ(loaded.config().embed_dim, 8u);
  for (const auto &p : toy.pairs) {
    EXPECT_EQ(generate(p.post, &toy.kb, toy.v, loaded, {}, 8).ids.ids,
              generate(p.post, &toy.kb, toy.v, m, {}, 8).ids.ids);
  }
}

TEST(Checkpoint, Float32RoundTripIsExact) {
  Toy toy;
  fs::path dir = temp_dir("f32");
  compute::set_precision(compute::Precision::k32);
  ModelConfig cfg = tiny_config();
  cfg.precision = 32;
  Model m(cfg, toy.v.size(), 9);
  compute::set_precision(compute::Precision::k64);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, m, toy.v, {});
  EXPECT_EQ(values_of(load_model(path, toy.v).params()), values_of(m.params()));
}

ErrorCode load_error(const std::string &path, const Vocabulary &v) {
  try {
    load_model(path, v);
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
  Toy toy;
  fs::path dir = temp_dir("trunc");
  Model m(tiny_config(), toy.v.size(), 9);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, m, toy.v, {});
  const auto size = fs::file_size(path);
  for (auto cut : {size - 1, size / 2, std::uintmax_t{12}}) {
    fs::copy_file(path, path + ".cut", fs::copy_options::overwrite_existing);
    fs::resize_file(path + ".cut", cut);
    EXPECT_EQ(load_error(path + ".cut", toy.v), ErrorCode::kCorruptCheckpoint) << cut;
  }
}

TEST(Checkpoint, FlippedByteIsCorrupt) {
  Toy toy;
  fs::path dir = temp_dir("flip");
  Model m(tiny_config(), toy.v.size(), 9);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, m, toy.v, {});
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(fs::file_size(path) / 2));
  f.put('\x7f');
  f.close();
  EXPECT_EQ(load_error(path, toy.v), ErrorCode::kCorruptCheckpoint);
}

TEST(Checkpoint, VocabularyMismatchIsCorrupt) {
  Toy toy;
  fs::path dir = temp_dir("vocab");
  Model m(tiny_config(), toy.v.size(), 9);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, m, toy.v, {});
  Vocabulary other = toy.v;
  other.insert("extra");
  EXPECT_EQ(load_error(path, other), ErrorCode::kCorruptCheckpoint);
}

TEST(Checkpoint, MissingFileIsIoError) {
  Toy toy;
  EXPECT_EQ(load_error("/nonexistent/x.ckpt", toy.v), ErrorCode::kIo);
}

}  // namespace
}  // namespace kgdial
