/*
 * Copyright 2026 The openset Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <vector>

namespace osr {

// Floor/ceiling applied to every probability that later feeds a log or an
// odds ratio.
inline constexpr double kProbClamp = 1e-12;

// Index of the largest entry; ties resolve to the lowest index.
int argmax_lowest(const std::vector<double>& values);

// Shift-invariant softmax over the K known classes.
std::vector<double> softmax_closed(const std::vector<double>& logits);

// Per-class sigmoid, each output clamped into [kProbClamp, 1 - kProbClamp].
std::vector<double> sigmoid_ova(const std::vector<double>& logits);

// Posterior over K known classes plus one none-of-the-known mass.
struct PosteriorK1 {
  std::vector<double> known;
  double ood = 0.0;
};

// Closed form of the evidence combination of K one-vs-all sigmoid units:
// p_i = exp(g_i) / (1 + sum_j exp(g_j)), p_ood = 1 / (1 + sum_j exp(g_j)),
// evaluated with a max shift that treats the implicit zero logit of the
// none-of-the-known slot like any other logit.
PosteriorK1 dste_combine(const std::vector<double>& logits);

// Literal product-form combination used as ground truth: each class mass is
// p_i * prod_{j != i} (1 - p_j), the none-of-the-known mass is
// prod_j (1 - p_j), all normalized by their sum. No algebraic simplification.
// Inputs must lie strictly inside (0, 1).
PosteriorK1 dste_combine_oracle(const std::vector<double>& binary_probs);

}  // namespace osr
