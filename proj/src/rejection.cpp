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

#include "osr/rejection.hpp"

#include <algorithm>
#include <cmath>

#include "osr/error.hpp"

namespace osr {

namespace {

double logsumexp(const std::vector<double>& logits) {
  const double shift = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double g : logits) sum += std::exp(g - shift);
  return shift + std::log(sum);
}

void check_posterior(const PosteriorK1& post, const char* where) {
  if (post.known.empty())
    throw_error(ErrorKind::invalid_argument, std::string(where) + ": empty posterior");
}

}  // namespace

const char* rule_name(Rule rule) {
  switch (rule) {
    case Rule::msp: return "msp";
    case Rule::energy: return "energy";
    case Rule::maxlogit: return "maxlogit";
    case Rule::binary_max: return "binary_max";
    case Rule::unified: return "unified";
  }
  throw_error(ErrorKind::internal, "rule_name: bad enum value");
}

Rule rule_from_name(const std::string& name) {
  for (const Rule rule : kAllRules)
    if (name == rule_name(rule)) return rule;
  throw_error(ErrorKind::config, "unknown rule '" + name + "'");
}

double score_msp(const std::vector<double>& logits) {
  const std::vector<double> probs = softmax_closed(logits);
  return *std::max_element(probs.begin(), probs.end());
}

double score_energy(const std::vector<double>& logits) {
  if (logits.empty()) throw_error(ErrorKind::invalid_argument, "score_energy: empty logits");
  return -logsumexp(logits);
}

double score_maxlogit(const std::vector<double>& logits) {
  if (logits.empty()) throw_error(ErrorKind::invalid_argument, "score_maxlogit: empty logits");
  return *std::max_element(logits.begin(), logits.end());
}

double score_binary_max(const std::vector<double>& logits) {
  const std::vector<double> probs = sigmoid_ova(logits);
  return *std::max_element(probs.begin(), probs.end());
}

double score_unified(const PosteriorK1& post, double eps) {
  check_posterior(post, "score_unified");
  if (!(eps >= 0.0)) throw_error(ErrorKind::invalid_argument, "score_unified: eps must be >= 0");
  const double max_known = *std::max_element(post.known.begin(), post.known.end());
  return std::min(1.0 - post.ood, max_known + eps);
}

double oriented_score(Rule rule, const std::vector<double>& logits, const PosteriorK1& post,
                      double eps) {
  switch (rule) {
    case Rule::msp: return score_msp(logits);
    case Rule::energy: return -score_energy(logits);
    case Rule::maxlogit: return score_maxlogit(logits);
    case Rule::binary_max: return score_binary_max(logits);
    case Rule::unified: return score_unified(post, eps);
  }
  throw_error(ErrorKind::internal, "oriented_score: bad enum value");
}

Decision decide(const PosteriorK1& post, double delta) {
  check_posterior(post, "decide");
  if (!(delta >= 0.0) || !(delta <= 1.0))
    throw_error(ErrorKind::invalid_argument, "decide: delta must lie in [0, 1]");
  Decision decision;
  const int best = argmax_lowest(post.known);
  decision.score = post.known[best];
  if (post.ood >= decision.score) {
    decision.verdict = Verdict::reject_ood;
  } else if (decision.score <= delta) {
    decision.verdict = Verdict::reject_misclassification;
  } else {
    decision.verdict = Verdict::accept;
    decision.class_index = best;
  }
  return decision;
}

}  // namespace osr
