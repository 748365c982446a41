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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kgdial/checkpoint.h"
#include "kgdial/errors.h"
#include "kgdial/random.h"

namespace kgdial {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  auto bad = [](const std::string &what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    bad("learning_rate must be >= 0");
  }
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (epochs < 1) bad("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    bad("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) bad("adam_epsilon must be > 0");
}

std::vector<TrainingExample> prepare_examples(const std::vector<DialoguePair> &pairs,
                                              const KnowledgeBase *kb, const Vocabulary &v,
                                              const ModelConfig &cfg) {
  const bool use_kg = cfg.ablation != Ablation::kNoKg && kb != nullptr;
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const DialoguePair &pair : pairs) {
    TrainingExample ex;
    ex.post = encode_post_text(pair.post, v);
    if (ex.post.length() > cfg.max_seq_len - 1) {
      ex.post.ids.resize(cfg.max_seq_len - 2);
      ex.post.ids.push_back(Vocabulary::kEos);
    }
    ex.response = encode_response_text(pair.response, v);
    if (ex.response.length() > cfg.max_seq_len + 1) {
      ex.response.ids.resize(cfg.max_seq_len);
      ex.response.ids.push_back(Vocabulary::kEos);
    }
    if (use_kg) ex.subgraphs = retrieve(pair.post, *kb, cfg.retrieval);
    out.push_back(std::move(ex));
  }
  return out;
}

Adam::Adam(Parameters &params, const TrainConfig &cfg)
    : params_(params),
      lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_epsilon) {
  for (const auto &p : params_.all()) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto &all = params_.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    compute::Tensor t = all[k].tensor;
    std::span<const double> g = t.grad();
    if (g.empty()) continue;
    std::span<double> w = t.mutable_data();
    auto &m = m_[k];
    auto &v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] = compute::round_to_precision(w[i] - lr_ * m_hat / (std::sqrt(v_hat) + eps_));
    }
  }
}

double grad_norm(const Parameters &params) {
  double total = 0.0;
  for (const auto &p : params.all()) {
    for (double g : p.tensor.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_grad_norm(Parameters &params, double max_norm) {
  const double norm = grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
    const double s = max_norm / norm;
    for (const auto &p : params.all()) {
      compute::Tensor t = p.tensor;
      for (double &g : t.mutable_grad()) g *= s;
    }
  }
  return norm;
}

double batch_loss_and_grad(const std::vector<const TrainingExample *> &batch,
                           const Vocabulary &v, Model &model) {
  std::vector<Example> examples;
  examples.reserve(batch.size());
  for (const TrainingExample *ex : batch) {
    examples.push_back({ex->post, ex->response, model.build_graph(ex->subgraphs, v)});
  }
  compute::Tensor loss = sequence_loss(examples, model);
  compute::backward(loss);
  return loss.item();
}

std::string format_epoch_line(const EpochStats &stats) {
  return fmt::format("{}\t{:.6f}\t{:.3f}", stats.epoch, stats.mean_loss, stats.wallclock_s);
}

namespace {

using Snapshot = std::vector<std::vector<double>>;

Snapshot snapshot_of(const Parameters &params) {
  Snapshot s;
  for (const auto &p : params.all()) s.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return s;
}

void restore(Parameters &params, const Snapshot &s) {
  const auto &all = params.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    compute::Tensor t = all[k].tensor;
    std::copy(s[k].begin(), s[k].end(), t.mutable_data().begin());
  }
}

std::size_t target_count(const TrainingExample &ex) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < ex.response.ids.size(); ++i) {
    if (ex.response.ids[i] != Vocabulary::kPad) ++n;
  }
  return n;
}

void prune_checkpoints(const fs::path &dir, std::size_t epoch, std::size_t keep) {
  if (keep == 0 || epoch <= keep) return;
  std::error_code ec;
  fs::remove(dir / fmt::format("epoch-{:04d}.ckpt", epoch - keep), ec);
}

}  // namespace

TrainReport fit(const std::vector<TrainingExample> &examples, const Vocabulary &v,
                Model &model, const TrainConfig &tcfg, std::ostream *log,
                const std::function<bool(const EpochStats &)> &on_epoch) {
  tcfg.validate();
  if (examples.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training examples");
  Parameters &params = model.params();
  Rng rng(tcfg.seed);
  Adam adam(params, tcfg);
  Snapshot last_good = snapshot_of(params);
  TrainReport report;

  fs::path dir;
  std::ofstream log_file;
  if (!tcfg.checkpoint_dir.empty()) {
    dir = tcfg.checkpoint_dir;
    fs::create_directories(dir);
    log_file.open(dir / "train.log", std::ios::app);
    if (!log_file) throw Error(ErrorCode::kIo, "cannot open " + (dir / "train.log").string());
  }

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    rng.shuffle(order);
    double weighted = 0.0;
    std::size_t tokens = 0;
    for (std::size_t b = 0; b < order.size(); b += tcfg.batch_size) {
      std::vector<const TrainingExample *> batch;
      std::size_t batch_tokens = 0;
      for (std::size_t i = b; i < std::min(order.size(), b + tcfg.batch_size); ++i) {
        batch.push_back(&examples[order[i]]);
        batch_tokens += target_count(examples[order[i]]);
      }
      if (batch_tokens == 0) continue;
      params.zero_grad();
      const double loss = batch_loss_and_grad(batch, v, model);
      const double norm = clip_grad_norm(params, tcfg.grad_clip_norm);
      if (!std::isfinite(loss) || !std::isfinite(norm)) {
        restore(params, last_good);
        params.zero_grad();
        throw Error(ErrorCode::kDivergedLoss,
                    fmt::format("non-finite {} in epoch {}; parameters restored to {}",
                                std::isfinite(loss) ? "gradient" : "loss", epoch,
                                report.last_checkpoint.empty() ? std::string("the last good epoch")
                                                               : report.last_checkpoint));
      }
      adam.step();
      weighted += loss * static_cast<double>(batch_tokens);
      tokens += batch_tokens;
    }
    if (tokens == 0) throw Error(ErrorCode::kEmptyBatch, "no response targets in corpus");

    EpochStats stats{epoch, weighted / static_cast<double>(tokens),
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count()};
    report.epochs.push_back(stats);
    const std::string line = format_epoch_line(stats);
    if (log != nullptr) *log << line << '\n' << std::flush;
    spdlog::debug("epoch {}", line);
    if (!dir.empty()) {
      const fs::path path = dir / fmt::format("epoch-{:04d}.ckpt", epoch);
      save_checkpoint(path.string(), model, v, tcfg, epoch);
      report.last_checkpoint = path.string();
      log_file << line << '\n' << std::flush;
      prune_checkpoints(dir, epoch, tcfg.keep_checkpoints);
    }
    last_good = snapshot_of(params);
    if (tcfg.stop_below > 0.0 && stats.mean_loss < tcfg.stop_below) break;
    if (on_epoch && !on_epoch(stats)) break;
  }
  return report;
}

}  // namespace kgdial
