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

#include "kgdial/checkpoint.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "kgdial/errors.h"
#include "kgdial/text.h"

namespace kgdial {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'K', 'G', 'D', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "little-endian host required");

[[noreturn]] void corrupt(const std::string &path, const std::string &why) {
  throw Error(ErrorCode::kCorruptCheckpoint, "checkpoint " + path + ": " + why);
}

json model_config_json(const ModelConfig &c) {
  return {{"embed_dim", c.embed_dim},
          {"triple_width", c.triple_width},
          {"enc_layers", c.enc_layers},
          {"dec_layers", c.dec_layers},
          {"heads", c.heads},
          {"max_seq_len", c.max_seq_len},
          {"ffn_dim", c.ffn_dim},
          {"ablation", ablation_name(c.ablation)},
          {"precision", c.precision},
          {"init_std", c.init_std},
          {"max_triples_per_subgraph", c.retrieval.max_triples_per_subgraph},
          {"max_subgraphs", c.retrieval.max_subgraphs}};
}

ModelConfig model_config_from(const json &j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim");
  c.triple_width = j.at("triple_width");
  c.enc_layers = j.at("enc_layers");
  c.dec_layers = j.at("dec_layers");
  c.heads = j.at("heads");
  c.max_seq_len = j.at("max_seq_len");
  c.ffn_dim = j.at("ffn_dim");
  c.ablation = parse_ablation(j.at("ablation"));
  c.precision = j.at("precision");
  c.init_std = j.at("init_std");
  c.retrieval.max_triples_per_subgraph = j.at("max_triples_per_subgraph");
  c.retrieval.max_subgraphs = j.at("max_subgraphs");
  return c;
}

json train_config_json(const TrainConfig &c) {
  return {{"learning_rate", c.learning_rate}, {"adam_epsilon", c.adam_epsilon},
          {"beta1", c.beta1},                 {"beta2", c.beta2},
          {"batch_size", c.batch_size},       {"epochs", c.epochs},
          {"seed", c.seed},                   {"grad_clip_norm", c.grad_clip_norm},
          {"stop_below", c.stop_below}};
}

TrainConfig train_config_from(const json &j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate");
  c.adam_epsilon = j.at("adam_epsilon");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.seed = j.at("seed");
  c.grad_clip_norm = j.at("grad_clip_norm");
  c.stop_below = j.at("stop_below");
  return c;
}

void append_u64(std::string &out, std::uint64_t x) {
  char buf[8];
  std::memcpy(buf, &x, 8);
  out.append(buf, 8);
}

std::uint64_t read_u64(const std::string &in, std::size_t at) {
  std::uint64_t x;
  std::memcpy(&x, in.data() + at, 8);
  return x;
}

}  // namespace

void save_checkpoint(const std::string &path, const Model &model, const Vocabulary &v,
                     const TrainConfig &tcfg, std::size_t epoch) {
  const bool f32 = model.config().precision == 32;
  json tensors = json::array();
  std::string payload;
  for (const auto &p : model.params().all()) {
    tensors.push_back({{"name", p.name},
                       {"shape", p.tensor.shape()},
                       {"dtype", f32 ? "float32" : "float64"}});
    for (double x : p.tensor.data()) {
      if (f32) {
        const float f = static_cast<float>(x);
        payload.append(reinterpret_cast<const char *>(&f), sizeof f);
      } else {
        payload.append(reinterpret_cast<const char *>(&x), sizeof x);
      }
    }
  }
  json header = {{"format", 1},
                 {"model_config", model_config_json(model.config())},
                 {"train_config", train_config_json(tcfg)},
                 {"vocab_hash", v.hash()},
                 {"vocab_size", v.size()},
                 {"epoch", epoch},
                 {"tensors", tensors}};
  const std::string head = header.dump();
  std::string bytes(kMagic, sizeof kMagic);
  append_u64(bytes, head.size());
  bytes += head;
  bytes += payload;
  append_u64(bytes, fnv1a64(bytes));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp + ": " + ec.message());
}

CheckpointData load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kMagic + 16) corrupt(path, "file too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) corrupt(path, "bad magic");
  const std::size_t body = bytes.size() - 8;
  if (fnv1a64(std::string_view(bytes).substr(0, body)) != read_u64(bytes, body)) {
    corrupt(path, "checksum mismatch (truncated or modified)");
  }
  const std::uint64_t head_len = read_u64(bytes, sizeof kMagic);
  const std::size_t head_at = sizeof kMagic + 8;
  if (head_len > body - head_at) corrupt(path, "header length out of range");

  CheckpointData data;
  std::size_t at = head_at + head_len;
  try {
    const json header = json::parse(bytes.substr(head_at, head_len));
    data.model_config = model_config_from(header.at("model_config"));
    data.train_config = train_config_from(header.at("train_config"));
    data.vocab_hash = header.at("vocab_hash");
    data.vocab_size = header.at("vocab_size");
    data.epoch = header.at("epoch");
    for (const json &t : header.at("tensors")) {
      const compute::Shape shape = t.at("shape");
      const std::string dtype = t.at("dtype");
      if (shape.size() != 2 || (dtype != "float32" && dtype != "float64")) {
        corrupt(path, "bad tensor entry");
      }
      const std::size_t n = shape[0] * shape[1];
      const std::size_t width = dtype == "float32" ? 4 : 8;
      if (n * width > body - at) corrupt(path, "payload shorter than tensor table");
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n; ++i, at += width) {
        if (width == 4) {
          float f;
          std::memcpy(&f, bytes.data() + at, 4);
          values[i] = f;
        } else {
          std::memcpy(&values[i], bytes.data() + at, 8);
        }
      }
      data.params.add(t.at("name"), compute::Tensor::from(shape[0], shape[1], std::move(values)));
    }
  } catch (const json::exception &e) {
    corrupt(path, std::string("bad header: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kCorruptCheckpoint) throw;
    corrupt(path, e.what());
  }
  if (at != body) corrupt(path, "trailing bytes after payload");
  return data;
}

Model load_model(const std::string &path, const Vocabulary &v, CheckpointData *meta) {
  CheckpointData data = load_checkpoint(path);
  if (data.vocab_hash != v.hash() || data.vocab_size != v.size()) {
    corrupt(path, "vocabulary hash does not match the vocabulary in use");
  }
  ModelConfig cfg = data.model_config;
  try {
    Model model(cfg, data.vocab_size, data.params);
    if (meta != nullptr) *meta = std::move(data);
    return model;
  } catch (const Error &e) {
    corrupt(path, e.what());
  }
}

}  // namespace kgdial
