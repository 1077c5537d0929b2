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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "osr/dataset.hpp"
#include "osr/model.hpp"
#include "osr/rejection.hpp"

namespace osr {

// Detection scores with binary task labels. Higher score = more likely
// positive. `correctness` is only consulted by the selective-risk metrics.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<char> is_positive;
  std::vector<char> correctness;
};

// Probability that a random positive outranks a random negative, ties 1/2.
double auroc(const ScoreSet& s);

// Area under precision-recall with step interpolation, thresholds descending,
// ties grouped.
double aupr(const ScoreSet& s);

// Smallest false-positive rate at any threshold whose true-positive rate
// reaches the target; samples tied at a threshold enter together.
double fpr_at_tpr(const ScoreSet& s, double tpr_target);

struct RCPoint {
  double coverage = 0.0;
  double risk = 0.0;
};

// Accept-by-descending-score curve, one point per distinct score (ties enter
// together): coverage = accepted/n, risk = errors among accepted / accepted.
std::vector<RCPoint> risk_coverage(const ScoreSet& s);

// Same curve with one point per sample in tie-stable order; first point has
// coverage 1/n by construction. This is the curve the area metrics average.
std::vector<RCPoint> selective_risk_points(const ScoreSet& s);

// (AURC, E-AURC): discrete mean of risk over the n per-sample points, and its
// excess over the hindsight ordering that accepts all correct samples first.
std::pair<double, double> aurc_eaurc(const ScoreSet& s);

// Undefined entries (degenerate label sets, e.g. no misclassification among
// the accepted test set) are reported as NaN and serialize to null.
struct OodMetrics {
  double auroc = 0.0;
  double aupr = 0.0;
  double fpr95 = 0.0;
};

struct MisdMetrics {
  double auroc = 0.0;
  double fpr95 = 0.0;
  double aurc = 0.0;
  double e_aurc = 0.0;
};

struct RuleMetrics {
  OodMetrics ood;
  MisdMetrics misd;
};

struct MetricsReport {
  double accuracy = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::vector<std::pair<Rule, RuleMetrics>> per_rule;
};

// One dump row per (sample, rule); oriented score values, true label -1 for
// the OOD block, predicted label always the known-class argmax.
struct ScoreRow {
  std::int64_t sample_index = 0;
  int true_label = 0;
  int pred_label = 0;
  Rule rule = Rule::msp;
  double value = 0.0;
};

struct Evaluation {
  MetricsReport report;
  std::vector<ScoreRow> rows;
};

// Closed-set accuracy over ind_test plus, per requested rule, OOD-detection
// metrics over ind_test + ood_test and misclassification-detection metrics
// over ind_test alone. ood_test must be labelled -1 throughout.
Evaluation evaluate(const ModelParams& p, const Dataset& ind_test, const Dataset& ood_test,
                    const std::vector<Rule>& rules, double eps, double delta);

// Deterministic rendering; aurc/e_aurc additionally scaled by 1000.
std::string metrics_to_json(const MetricsReport& report);

}  // namespace osr
