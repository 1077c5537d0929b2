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

#include "osr/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "osr/error.hpp"

namespace osr {

namespace {

void require_finite_logits(const std::vector<double>& logits, const char* where) {
  if (logits.empty()) throw_error(ErrorKind::invalid_argument, std::string(where) + ": empty logits");
  for (double g : logits)
    if (!std::isfinite(g))
      throw_error(ErrorKind::numeric, std::string(where) + ": non-finite logit");
}

}  // namespace

int argmax_lowest(const std::vector<double>& values) {
  if (values.empty()) throw_error(ErrorKind::invalid_argument, "argmax_lowest: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> softmax_closed(const std::vector<double>& logits) {
  require_finite_logits(logits, "softmax_closed");
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - shift);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

std::vector<double> sigmoid_ova(const std::vector<double>& logits) {
  require_finite_logits(logits, "sigmoid_ova");
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double g = logits[i];
    double p;
    if (g >= 0.0) {
      p = 1.0 / (1.0 + std::exp(-g));
    } else {
      const double e = std::exp(g);
      p = e / (1.0 + e);
    }
    out[i] = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  }
  return out;
}

PosteriorK1 dste_combine(const std::vector<double>& logits) {
  require_finite_logits(logits, "dste_combine");
  // The none-of-the-known slot behaves like a logit fixed at zero, so the
  // stability shift must not drop below zero.
  double shift = *std::max_element(logits.begin(), logits.end());
  shift = std::max(shift, 0.0);

  PosteriorK1 post;
  post.known.resize(logits.size());
  const double ood_term = std::exp(-shift);
  double denom = ood_term;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    post.known[i] = std::exp(logits[i] - shift);
    denom += post.known[i];
  }
  for (double& v : post.known) v /= denom;
  post.ood = ood_term / denom;
  return post;
}

PosteriorK1 dste_combine_oracle(const std::vector<double>& binary_probs) {
  if (binary_probs.empty())
    throw_error(ErrorKind::invalid_argument, "dste_combine_oracle: empty input");
  for (double p : binary_probs)
    if (!(p > 0.0) || !(p < 1.0))
      throw_error(ErrorKind::invalid_argument,
                  "dste_combine_oracle: probabilities must lie strictly inside (0, 1)");

  const std::size_t k = binary_probs.size();
  std::vector<double> masses(k);
  for (std::size_t i = 0; i < k; ++i) {
    double m = binary_probs[i];
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) m *= 1.0 - binary_probs[j];
    masses[i] = m;
  }
  double none_mass = 1.0;
  for (std::size_t j = 0; j < k; ++j) none_mass *= 1.0 - binary_probs[j];

  double normalizer = none_mass;
  for (double m : masses) normalizer += m;
  if (normalizer == 0.0)
    throw_error(ErrorKind::numeric, "dste_combine_oracle: zero normalizer");

  PosteriorK1 post;
  post.known.resize(k);
  for (std::size_t i = 0; i < k; ++i) post.known[i] = masses[i] / normalizer;
  post.ood = none_mass / normalizer;
  return post;
}

}  // namespace osr
