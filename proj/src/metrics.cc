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

#include "kgdial/metrics.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"
#include "kgdial/errors.h"
#include "kgdial/text.h"

namespace kgdial {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Sentence &s, std::size_t n) {
  NgramCounts out;
  if (n == 0 || s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
  }
  return out;
}

void check_corpus(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs) {
  if (hyps.empty() || refs.empty()) throw Error(ErrorCode::kEmptyCorpus, "no sentences to score");
  if (hyps.size() != refs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} hypotheses but {} references", hyps.size(), refs.size()));
  }
}

void check_order(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n-gram order must be positive");
}

std::size_t total_length(const std::vector<Sentence> &c) {
  std::size_t n = 0;
  for (const Sentence &s : c) n += s.size();
  return n;
}

NgramCounts pooled(const std::vector<Sentence> &hyps, std::size_t n) {
  NgramCounts all;
  for (const Sentence &s : hyps) {
    for (auto &[g, c] : ngrams(s, n)) all[g] += c;
  }
  if (all.empty()) {
    throw Error(ErrorCode::kNoNgrams, fmt::format("no hypothesis has {} tokens", n));
  }
  return all;
}

}  // namespace

std::vector<Sentence> tokenize_sentences(const std::vector<std::string> &lines) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const std::string &l : lines) out.push_back(normalize_tokens(l));
  return out;
}

double bleu(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs,
            std::size_t n) {
  check_corpus(hyps, refs);
  check_order(n);
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    std::size_t matched = 0, total = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      NgramCounts h = ngrams(hyps[i], k), r = ngrams(refs[i], k);
      for (const auto &[g, c] : h) {
        total += c;
        auto it = r.find(g);
        if (it != r.end()) matched += std::min(c, it->second);
      }
    }
    const double num = matched == 0 ? kBleuEpsilon : static_cast<double>(matched);
    const double den = total == 0 ? 1.0 : static_cast<double>(total);
    log_sum += std::log(num / den) / static_cast<double>(n);
  }
  const double c = static_cast<double>(total_length(hyps));
  const double r = static_cast<double>(total_length(refs));
  if (c == 0.0) return 0.0;
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

double nist(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs,
            std::size_t n) {
  check_corpus(hyps, refs);
  check_order(n);
  // Reference n-gram counts for orders 0..n; order 0 is the word total.
  std::vector<NgramCounts> ref_counts(n + 1);
  std::size_t ref_words = total_length(refs);
  for (const Sentence &s : refs) {
    for (std::size_t k = 1; k <= n; ++k) {
      for (auto &[g, c] : ngrams(s, k)) ref_counts[k][g] += c;
    }
  }
  auto info = [&](const std::vector<std::string> &g) {
    const double count = static_cast<double>(ref_counts[g.size()].at(g));
    double prefix;
    if (g.size() == 1) {
      prefix = static_cast<double>(ref_words);
    } else {
      prefix = static_cast<double>(
          ref_counts[g.size() - 1].at(std::vector<std::string>(g.begin(), g.end() - 1)));
    }
    return std::log2(prefix / count);
  };
  double score = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    double weighted = 0.0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      NgramCounts h = ngrams(hyps[i], k), r = ngrams(refs[i], k);
      for (const auto &[g, c] : h) {
        total += c;
        auto it = r.find(g);
        if (it != r.end()) weighted += static_cast<double>(std::min(c, it->second)) * info(g);
      }
    }
    if (total > 0) score += weighted / static_cast<double>(total);
  }
  const double c = static_cast<double>(total_length(hyps));
  const double r = static_cast<double>(ref_words);
  if (c == 0.0 || r == 0.0) return 0.0;
  const double beta = std::log(0.5) / std::pow(std::log(2.0 / 3.0), 2);
  const double ratio = std::min(c / r, 1.0);
  return score * std::exp(beta * std::pow(std::log(ratio), 2));
}

namespace {

// Depth-first search over hypothesis positions. Words occurring more often
// in the hypothesis than the reference may leave surplus positions
// unaligned; everything else must align to keep the match count maximal.
class ChunkSearch {
 public:
  ChunkSearch(const Sentence &hyp, const Sentence &ref) : hyp_(hyp), ref_(ref) {
    std::unordered_map<std::string, std::size_t> hc, rc;
    for (const auto &w : hyp) ++hc[w];
    for (const auto &w : ref) ++rc[w];
    for (const auto &[w, c] : hc) {
      const std::size_t r = rc.count(w) ? rc[w] : 0;
      matches_ += std::min(c, r);
      skips_left_[w] = c > r ? c - r : 0;
    }
    for (std::size_t j = 0; j < ref.size(); ++j) positions_[ref[j]].push_back(j);
    used_.assign(ref.size(), false);
  }

  MeteorAlignment run() {
    if (matches_ == 0) return {0, 0};
    best_ = matches_ + 1;
    dfs(0, kNone, 0);
    return {matches_, best_};
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kBudget = 2000000;

  void dfs(std::size_t i, std::size_t prev_ref, std::size_t chunks) {
    if (chunks >= best_ || ++visited_ > kBudget) return;
    if (i == hyp_.size()) {
      best_ = chunks;
      return;
    }
    const std::string &w = hyp_[i];
    auto it = positions_.find(w);
    if (it != positions_.end()) {
      // Continuing the current chunk first finds good bounds early.
      if (prev_ref != kNone && prev_ref + 1 < ref_.size() && !used_[prev_ref + 1] &&
          ref_[prev_ref + 1] == w) {
        used_[prev_ref + 1] = true;
        dfs(i + 1, prev_ref + 1, chunks);
        used_[prev_ref + 1] = false;
      }
      for (std::size_t j : it->second) {
        if (used_[j] || (prev_ref != kNone && j == prev_ref + 1)) continue;
        used_[j] = true;
        dfs(i + 1, j, chunks + 1);
        used_[j] = false;
      }
    }
    auto skip = skips_left_.find(w);
    if (skip != skips_left_.end() && skip->second > 0) {
      --skip->second;
      dfs(i + 1, kNone, chunks);
      ++skip->second;
    }
  }

  const Sentence &hyp_;
  const Sentence &ref_;
  std::size_t matches_ = 0;
  std::size_t best_ = 0;
  std::size_t visited_ = 0;
  std::unordered_map<std::string, std::size_t> skips_left_;
  std::unordered_map<std::string, std::vector<std::size_t>> positions_;
  std::vector<bool> used_;
};

}  // namespace

MeteorAlignment meteor_align(const Sentence &hyp, const Sentence &ref) {
  return ChunkSearch(hyp, ref).run();
}

double meteor_lite(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs) {
  check_corpus(hyps, refs);
  double total = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const MeteorAlignment a = meteor_align(hyps[i], refs[i]);
    if (a.matches == 0) continue;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(hyps[i].size());
    const double r = m / static_cast<double>(refs[i].size());
    const double f = 10.0 * p * r / (r + 9.0 * p);
    const double penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3);
    total += f * (1.0 - penalty);
  }
  return total / static_cast<double>(hyps.size());
}

double distinct_n(const std::vector<Sentence> &hyps, std::size_t n) {
  check_order(n);
  NgramCounts all = pooled(hyps, n);
  std::size_t total = 0;
  for (const auto &[g, c] : all) total += c;
  return static_cast<double>(all.size()) / static_cast<double>(total);
}

double entropy_n(const std::vector<Sentence> &hyps, std::size_t n) {
  check_order(n);
  NgramCounts all = pooled(hyps, n);
  double total = 0.0;
  for (const auto &[g, c] : all) total += static_cast<double>(c);
  double h = 0.0;
  for (const auto &[g, c] : all) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

std::size_t used_entities(const Sentence &hyp, const std::vector<Subgraph> &subgraphs) {
  const std::set<std::string> tokens(hyp.begin(), hyp.end());
  std::size_t used = 0;
  for (const std::string &e : retrieved_entities(subgraphs)) used += tokens.count(e);
  return used;
}

KnowledgeUsage knowledge_incorporation(const std::vector<Sentence> &hyps,
                                       const std::vector<std::vector<Subgraph>> &per_post) {
  if (hyps.size() != per_post.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} hypotheses but {} retrieval results", hyps.size(),
                            per_post.size()));
  }
  KnowledgeUsage out;
  std::map<std::size_t, double> sums;
  double total = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const std::size_t u = used_entities(hyps[i], per_post[i]);
    const std::size_t bucket = retrieved_entities(per_post[i]).size();
    out.used.push_back(u);
    total += static_cast<double>(u);
    sums[bucket] += static_cast<double>(u);
    ++out.curve[bucket].examples;
  }
  for (auto &[k, b] : out.curve) b.mean_used = sums[k] / static_cast<double>(b.examples);
  if (!hyps.empty()) out.mean_used = total / static_cast<double>(hyps.size());
  return out;
}

EvalReport evaluate(const std::vector<Sentence> &hyps, const std::vector<Sentence> &refs,
                    const std::vector<std::vector<Subgraph>> *per_post) {
  EvalReport r;
  r.sentences = hyps.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    r.bleu[n - 1] = bleu(hyps, refs, n);
    r.nist[n - 1] = nist(hyps, refs, n);
  }
  r.meteor = meteor_lite(hyps, refs);
  auto or_zero = [&](auto f) {
    try {
      return f();
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNoNgrams) throw;
      return 0.0;
    }
  };
  r.dist_1 = or_zero([&] { return distinct_n(hyps, 1); });
  r.dist_2 = or_zero([&] { return distinct_n(hyps, 2); });
  r.ent_4 = or_zero([&] { return entropy_n(hyps, 4); });
  if (per_post != nullptr) r.knowledge_used_mean = knowledge_incorporation(hyps, *per_post).mean_used;
  return r;
}

namespace {

std::vector<std::pair<std::string, double>> report_fields(const EvalReport &r) {
  std::vector<std::pair<std::string, double>> f;
  for (int n = 1; n <= 4; ++n) f.emplace_back(fmt::format("bleu_{}", n), r.bleu[n - 1]);
  for (int n = 1; n <= 4; ++n) f.emplace_back(fmt::format("nist_{}", n), r.nist[n - 1]);
  f.emplace_back("meteor", r.meteor);
  f.emplace_back("dist_1", r.dist_1);
  f.emplace_back("dist_2", r.dist_2);
  f.emplace_back("ent_4", r.ent_4);
  if (r.knowledge_used_mean) f.emplace_back("knowledge_used_mean", *r.knowledge_used_mean);
  return f;
}

}  // namespace

std::string format_report_text(const EvalReport &report) {
  std::string out;
  for (const auto &[k, v] : report_fields(report)) out += fmt::format("{:<20}{:.4f}\n", k, v);
  out += fmt::format("{:<20}{}\n", "sentences", report.sentences);
  return out;
}

std::string format_report_json(const EvalReport &report) {
  nlohmann::ordered_json j;
  for (const auto &[k, v] : report_fields(report)) j[k] = v;
  j["sentences"] = report.sentences;
  return j.dump();
}

}  // namespace kgdial
