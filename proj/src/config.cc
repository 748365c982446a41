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

#include "kgdial/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <string_view>

#include "kgdial/errors.h"

namespace kgdial {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Error bad_value(const std::string &key, const std::string &value, const char *what) {
  return Error(ErrorCode::kInvalidArgument,
               "setting " + key + ": expected " + what + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string &key, const std::string &value, const char *what) {
  T out{};
  const char *b = value.data();
  const char *e = b + value.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || ptr != e || value.empty()) throw bad_value(key, value, what);
  return out;
}

std::size_t as_size(const std::string &k, const std::string &v) {
  return parse_number<std::size_t>(k, v, "a non-negative integer");
}
double as_double(const std::string &k, const std::string &v) {
  return parse_number<double>(k, v, "a number");
}

using Setter = std::function<void(RunConfig &, const std::string &, const std::string &)>;

const std::map<std::string, Setter> &setters() {
  static const std::map<std::string, Setter> table = {
      {"kb", [](RunConfig &c, auto &, auto &v) { c.kb = v; }},
      {"corpus", [](RunConfig &c, auto &, auto &v) { c.corpus = v; }},
      {"workdir", [](RunConfig &c, auto &, auto &v) { c.workdir = v; }},
      {"checkpoint", [](RunConfig &c, auto &, auto &v) { c.checkpoint = v; }},
      {"embed_dim", [](RunConfig &c, auto &k, auto &v) { c.model.embed_dim = as_size(k, v); }},
      {"triple_width",
       [](RunConfig &c, auto &k, auto &v) { c.model.triple_width = as_size(k, v); }},
      {"enc_layers", [](RunConfig &c, auto &k, auto &v) { c.model.enc_layers = as_size(k, v); }},
      {"dec_layers", [](RunConfig &c, auto &k, auto &v) { c.model.dec_layers = as_size(k, v); }},
      {"heads", [](RunConfig &c, auto &k, auto &v) { c.model.heads = as_size(k, v); }},
      {"max_seq_len",
       [](RunConfig &c, auto &k, auto &v) { c.model.max_seq_len = as_size(k, v); }},
      {"ffn_dim", [](RunConfig &c, auto &k, auto &v) { c.model.ffn_dim = as_size(k, v); }},
      {"ablation", [](RunConfig &c, auto &, auto &v) { c.model.ablation = parse_ablation(v); }},
      {"precision",
       [](RunConfig &c, auto &k, auto &v) {
         const std::size_t p = as_size(k, v);
         if (p != 32 && p != 64) throw bad_value(k, v, "32 or 64");
         c.model.precision = static_cast<int>(p);
       }},
      {"init_std", [](RunConfig &c, auto &k, auto &v) { c.model.init_std = as_double(k, v); }},
      {"max_triples_per_subgraph",
       [](RunConfig &c, auto &k, auto &v) {
         c.model.retrieval.max_triples_per_subgraph = as_size(k, v);
       }},
      {"max_subgraphs",
       [](RunConfig &c, auto &k, auto &v) { c.model.retrieval.max_subgraphs = as_size(k, v); }},
      {"learning_rate",
       [](RunConfig &c, auto &k, auto &v) { c.train.learning_rate = as_double(k, v); }},
      {"adam_epsilon",
       [](RunConfig &c, auto &k, auto &v) { c.train.adam_epsilon = as_double(k, v); }},
      {"beta1", [](RunConfig &c, auto &k, auto &v) { c.train.beta1 = as_double(k, v); }},
      {"beta2", [](RunConfig &c, auto &k, auto &v) { c.train.beta2 = as_double(k, v); }},
      {"batch_size", [](RunConfig &c, auto &k, auto &v) { c.train.batch_size = as_size(k, v); }},
      {"epochs", [](RunConfig &c, auto &k, auto &v) { c.train.epochs = as_size(k, v); }},
      {"grad_clip_norm",
       [](RunConfig &c, auto &k, auto &v) { c.train.grad_clip_norm = as_double(k, v); }},
      {"keep_checkpoints",
       [](RunConfig &c, auto &k, auto &v) { c.train.keep_checkpoints = as_size(k, v); }},
      {"stop_below", [](RunConfig &c, auto &k, auto &v) { c.train.stop_below = as_double(k, v); }},
      {"seed",
       [](RunConfig &c, auto &k, auto &v) {
         c.seed = parse_number<std::uint64_t>(k, v, "a non-negative integer");
         c.train.seed = c.seed;
       }},
      {"decoding",
       [](RunConfig &c, auto &k, auto &v) {
         if (v == "greedy") {
           c.decoding.kind = Decoding::Kind::kGreedy;
         } else if (v == "beam") {
           c.decoding.kind = Decoding::Kind::kBeam;
         } else {
           throw bad_value(k, v, "greedy or beam");
         }
       }},
      {"beam_size",
       [](RunConfig &c, auto &k, auto &v) {
         c.decoding.beam_size = as_size(k, v);
         if (c.decoding.beam_size == 0) throw bad_value(k, v, "a positive integer");
       }},
      {"max_new", [](RunConfig &c, auto &k, auto &v) { c.max_new = as_size(k, v); }},
  };
  return table;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream &in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw MalformedLine(line_no, "expected key = value");
    std::string_view key = trim(s.substr(0, eq));
    std::string_view value = trim(s.substr(eq + 1));
    if (key.empty()) throw MalformedLine(line_no, "empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

void apply_setting(RunConfig &cfg, const std::string &key, const std::string &value) {
  auto it = setters().find(key);
  if (it == setters().end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown setting '" + key + "'");
  }
  it->second(cfg, key, value);
}

void load_config_file(RunConfig &cfg, const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  for (const auto &[k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> keys;
  for (const auto &[k, _] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace kgdial
