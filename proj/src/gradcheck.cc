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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgdial/compute.h"
#include "kgdial/random.h"

namespace kgdial::compute {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const GradCheckEntry &e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

GradCheckReport check_gradients(const std::function<Tensor()> &f,
                                const std::vector<NamedTensor> &params,
                                const GradCheckOptions &options) {
  std::vector<Tensor> tensors;
  for (const NamedTensor &p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
    tensors.push_back(t);
  }
  {
    Tensor loss = f();
    backward(loss);
  }
  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = tensors[k];
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    if (analytic.size() != t.numel()) analytic.assign(t.numel(), 0.0);

    std::vector<std::size_t> entries(t.numel());
    std::iota(entries.begin(), entries.end(), 0);
    if (entries.size() > options.max_entries_per_tensor) {
      rng.shuffle(entries);
      entries.resize(options.max_entries_per_tensor);
      std::sort(entries.begin(), entries.end());
    }

    GradCheckEntry entry;
    entry.name = params[k].name;
    NoGradGuard no_grad;
    for (std::size_t idx : entries) {
      double &slot = t.mutable_data()[idx];
      const double saved = slot;
      const double h = options.step;
      auto eval_at = [&](double offset) {
        slot = saved + offset;
        return f().item();
      };
      double numeric;
      if (options.five_point) {
        numeric = (eval_at(-2 * h) - 8 * eval_at(-h) + 8 * eval_at(h) - eval_at(2 * h)) /
                  (12 * h);
      } else {
        numeric = (eval_at(h) - eval_at(-h)) / (2 * h);
      }
      slot = saved;
      const double abs_err = std::abs(numeric - analytic[idx]);
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic[idx]), options.abs_floor});
      const double rel_err = abs_err / denom;
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, rel_err);
      ++entry.checked;
    }
    entry.passed = entry.max_rel_error <= options.tolerance;
    report.passed = report.passed && entry.passed;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace kgdial::compute
