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

#include <string>
#include <vector>

#include "osr/posterior.hpp"

namespace osr {

enum class Rule { msp, energy, maxlogit, binary_max, unified };

constexpr Rule kAllRules[] = {Rule::msp, Rule::energy, Rule::maxlogit, Rule::binary_max,
                              Rule::unified};

const char* rule_name(Rule rule);
Rule rule_from_name(const std::string& name);

// Raw scoring functions.
double score_msp(const std::vector<double>& logits);        // max softmax probability
double score_energy(const std::vector<double>& logits);     // -log sum exp(g_i)
double score_maxlogit(const std::vector<double>& logits);   // max_i g_i
double score_binary_max(const std::vector<double>& logits); // max_i sigmoid(g_i)
// min{ 1 - p_ood, max_i p_i + eps } over the combined posterior.
double score_unified(const PosteriorK1& post, double eps);

// Registry entry point: the rule's score oriented so that a higher value
// always means more in-distribution / more likely correct. Only the energy
// rule needs flipping (its raw form grows on out-of-distribution inputs), so
// its oriented value is +log sum exp(g_i).
double oriented_score(Rule rule, const std::vector<double>& logits, const PosteriorK1& post,
                      double eps);

enum class Verdict { accept, reject_ood, reject_misclassification };

struct Decision {
  Verdict verdict = Verdict::accept;
  int class_index = -1;    // valid only when verdict == accept
  double score = 0.0;      // max known-class mass backing the decision
};

// Three-way decision: reject as out-of-distribution when the none-of-the-known
// mass reaches the largest class mass; otherwise reject as a likely
// misclassification when that largest mass is <= delta; otherwise accept the
// argmax class (ties to the lowest index).
Decision decide(const PosteriorK1& post, double delta);

}  // namespace osr
