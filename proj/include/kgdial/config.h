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

// Flat "key = value" settings files and the merged run configuration the
// command-line tool works from.

#ifndef KGDIAL_CONFIG_H_
#define KGDIAL_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "kgdial/model.h"
#include "kgdial/trainer.h"

namespace kgdial {

struct RunConfig {
  std::string kb;
  std::string corpus;
  std::string workdir;
  std::string checkpoint;
  ModelConfig model;
  TrainConfig train;
  Decoding decoding;
  std::size_t max_new = 32;
  std::uint64_t seed = 42;
};

// One pair per non-blank line. '#' starts a comment; surrounding whitespace
// and optional double quotes around the value are stripped. Throws
// MalformedLine for a line without '=' or with an empty key.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream &in);

// Sets one typed field. Throws Error(kInvalidArgument) for an unknown key or
// a value that does not parse.
void apply_setting(RunConfig &cfg, const std::string &key, const std::string &value);

// Applies every pair in the file in order. Throws Error(kIo) if it can't be
// opened.
void load_config_file(RunConfig &cfg, const std::string &path);

// Keys accepted by apply_setting, sorted.
std::vector<std::string> setting_keys();

}  // namespace kgdial

#endif  // KGDIAL_CONFIG_H_
