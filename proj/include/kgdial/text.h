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

#ifndef KGDIAL_TEXT_H_
#define KGDIAL_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgdial {

// Splits on runs of ASCII whitespace. No other normalization.
std::vector<std::string> split_whitespace(std::string_view text);

std::string to_lower(std::string_view text);

// Lowercases and detaches sentence punctuation (,.!?;:"()) from words so that
// "tea," yields the tokens "tea" and ",". Apostrophes stay inside words.
std::vector<std::string> normalize_tokens(std::string_view text);

// normalize_tokens joined by single spaces.
std::string normalize_text(std::string_view text);

std::string join(const std::vector<std::string> &pieces, std::string_view sep);

// "RelatedTo" -> {"related", "to"}; "IsA" -> {"is", "a"}.
std::vector<std::string> camel_split(std::string_view name);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace kgdial

#endif  // KGDIAL_TEXT_H_
