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

// Checkpoint layout: the magic "KGDCKPT1", a little-endian u64 header
// length, a JSON header (configs, vocabulary hash, tensor table), the raw
// little-endian values of every tensor in table order, and an FNV-1a 64
// checksum of everything before it.

#ifndef KGDIAL_CHECKPOINT_H_
#define KGDIAL_CHECKPOINT_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "kgdial/model.h"
#include "kgdial/trainer.h"
#include "kgdial/vocab.h"

namespace kgdial {

struct CheckpointData {
  ModelConfig model_config;
  TrainConfig train_config;
  std::uint64_t vocab_hash = 0;
  std::size_t vocab_size = 0;
  std::size_t epoch = 0;
  Parameters params;
};

// Writes through a temporary file and renames. Values are stored at the
// model's precision.
void save_checkpoint(const std::string &path, const Model &model, const Vocabulary &v,
                     const TrainConfig &tcfg, std::size_t epoch = 0);

// Throws Error(kCorruptCheckpoint) on a bad magic, checksum, header or
// truncated payload, and Error(kIo) if the file cannot be opened.
CheckpointData load_checkpoint(const std::string &path);

// Also requires the vocabulary hash and size to match v.
Model load_model(const std::string &path, const Vocabulary &v,
                 CheckpointData *meta = nullptr);

}  // namespace kgdial

#endif  // KGDIAL_CHECKPOINT_H_
