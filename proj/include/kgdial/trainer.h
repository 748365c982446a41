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

#ifndef KGDIAL_TRAINER_H_
#define KGDIAL_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "kgdial/kb.h"
#include "kgdial/model.h"
#include "kgdial/vocab.h"

namespace kgdial {

struct TrainConfig {
  double learning_rate = 1e-4;
  double adam_epsilon = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t batch_size = 8;
  std::size_t epochs = 5;
  std::uint64_t seed = 42;
  // Global-norm clipping; <= 0 disables.
  double grad_clip_norm = 1.0;
  // Empty disables checkpointing.
  std::string checkpoint_dir;
  // Older per-epoch checkpoints beyond this many are removed; 0 keeps all.
  std::size_t keep_checkpoints = 3;
  // Stop once an epoch mean falls below this; <= 0 disables.
  double stop_below = 0.0;

  // learning_rate >= 0 is accepted so that a zero step can be exercised.
  void validate() const;
};

// A dialogue pair in model form. Graphs are rebuilt from the subgraphs for
// every forward pass.
struct TrainingExample {
  TokenSeq post;      // ends with EOS
  TokenSeq response;  // BOS ... EOS
  std::vector<Subgraph> subgraphs;
};

// Retrieval and encoding for a corpus. Posts longer than max_seq_len - 1 and
// responses longer than max_seq_len + 1 are cut, keeping the final EOS.
std::vector<TrainingExample> prepare_examples(const std::vector<DialoguePair> &pairs,
                                              const KnowledgeBase *kb, const Vocabulary &v,
                                              const ModelConfig &cfg);

// Bias-corrected Adam over every tensor in a parameter set.
class Adam {
 public:
  Adam(Parameters &params, const TrainConfig &cfg);
  void step();
  std::size_t steps() const { return t_; }

 private:
  Parameters &params_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Scales every gradient so the global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(Parameters &params, double max_norm);
double grad_norm(const Parameters &params);

// One forward/backward over a batch. Returns the batch loss; gradients are
// left in the parameters.
double batch_loss_and_grad(const std::vector<const TrainingExample *> &batch,
                           const Vocabulary &v, Model &model);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double wallclock_s = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::string last_checkpoint;
};

// Tab-separated "epoch mean_loss wallclock_s".
std::string format_epoch_line(const EpochStats &stats);

// Adam over seeded shuffles of the examples. Epoch mean loss is weighted by
// target tokens. With checkpoint_dir set, writes epoch-NNNN.ckpt and
// appends train.log after each epoch. On a non-finite loss or gradient the
// parameters are restored to the last completed epoch (or the start) and
// Error(kDivergedLoss) is thrown. on_epoch may return false to stop early.
TrainReport fit(const std::vector<TrainingExample> &examples, const Vocabulary &v,
                Model &model, const TrainConfig &tcfg, std::ostream *log = nullptr,
                const std::function<bool(const EpochStats &)> &on_epoch = {});

}  // namespace kgdial

#endif  // KGDIAL_TRAINER_H_
