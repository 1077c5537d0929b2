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

#include "osr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "osr/error.hpp"
#include "osr/model.hpp"
#include "osr/rng.hpp"

using osr::ScoreSet;

namespace {

ScoreSet make_set(std::vector<double> scores, std::vector<int> positives) {
  ScoreSet s;
  s.scores = std::move(scores);
  s.is_positive.assign(s.scores.size(), 0);
  for (int i : positives) s.is_positive[i] = 1;
  s.correctness = s.is_positive;
  return s;
}

ScoreSet random_tied_set(osr::Rng& rng, int n) {
  // Scores off a small integer grid so ties are common.
  ScoreSet s;
  s.scores.resize(n);
  s.is_positive.resize(n);
  s.correctness.resize(n);
  for (int i = 0; i < n; ++i) {
    s.scores[i] = static_cast<double>(rng.next_below(9)) / 8.0;
    s.is_positive[i] = rng.uniform() < 0.5 ? 1 : 0;
    s.correctness[i] = rng.uniform() < 0.5 ? 1 : 0;
  }
  return s;
}

bool has_both_classes(const ScoreSet& s) {
  bool pos = false;
  bool neg = false;
  for (char c : s.is_positive) (c ? pos : neg) = true;
  return pos && neg;
}

// Probability a random positive outranks a random negative, by direct pair
// counting with half-credit ties.
double auroc_pairwise(const ScoreSet& s) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (!s.is_positive[i]) continue;
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
      if (s.is_positive[j]) continue;
      ++pairs;
      if (s.scores[i] > s.scores[j]) wins += 1.0;
      else if (s.scores[i] == s.scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Step-interpolated precision-recall area recomputed threshold by threshold.
double aupr_by_thresholds(const ScoreSet& s) {
  std::set<double> distinct(s.scores.begin(), s.scores.end());
  std::vector<double> thresholds(distinct.rbegin(), distinct.rend());  // descending
  double total_pos = 0.0;
  for (char c : s.is_positive) total_pos += c;
  double area = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      if (s.scores[i] >= t) (s.is_positive[i] ? tp : fp) += 1.0;
    }
    const double recall = tp / total_pos;
    const double precision = tp / (tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace

TEST_CASE("auroc hand values") {
  // Positives hold ranks 4 and 1 of [0.9, 0.4, 0.6, 0.1]: 2 wins of 4 pairs.
  CHECK(osr::auroc(make_set({0.9, 0.4, 0.6, 0.1}, {0, 3})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(osr::auroc(make_set({0.9, 0.8, 0.2, 0.1}, {0, 1})) == 1.0);
  CHECK(osr::auroc(make_set({0.9, 0.8, 0.2, 0.1}, {2, 3})) == 0.0);
  CHECK(osr::auroc(make_set({0.5, 0.5, 0.5, 0.5}, {0, 1})) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("auroc error paths") {
  CHECK_THROWS_AS(osr::auroc(ScoreSet{}), osr::Error);
  CHECK_THROWS_AS(osr::auroc(make_set({0.1, 0.2}, {0, 1})), osr::Error);  // no negatives
  CHECK_THROWS_AS(osr::auroc(make_set({0.1, 0.2}, {})), osr::Error);      // no positives
  ScoreSet bad = make_set({0.1, std::numeric_limits<double>::quiet_NaN()}, {0});
  try {
    osr::auroc(bad);
    FAIL("expected a throw");
  } catch (const osr::Error& e) {
    CHECK(e.kind() == osr::ErrorKind::numeric);
  }
}

TEST_CASE("auroc matches pairwise counting on tied random sets") {
  osr::Rng rng(2024);
  int checked = 0;
  while (checked < 50) {
    const ScoreSet s = random_tied_set(rng, 3 + static_cast<int>(rng.next_below(40)));
    if (!has_both_classes(s)) continue;
    ++checked;
    CHECK(osr::auroc(s) == doctest::Approx(auroc_pairwise(s)).epsilon(1e-10));
  }
}

TEST_CASE("auroc obeys the complement law under label flips") {
  osr::Rng rng(2025);
  int checked = 0;
  while (checked < 20) {
    ScoreSet s = random_tied_set(rng, 25);
    if (!has_both_classes(s)) continue;
    ++checked;
    const double forward = osr::auroc(s);
    for (char& c : s.is_positive) c = c ? 0 : 1;
    CHECK(osr::auroc(s) == doctest::Approx(1.0 - forward).epsilon(1e-12));
  }
}

TEST_CASE("aupr hand values and threshold-recomputation oracle") {
  // Descending thresholds: P at recall steps 1/2 (precision 1) and 1 (3/4 at
  // the third cut... recomputed: 1*(1/2) + (1/3... ) -- frozen against the
  // independent recomputation below and the closed-form 5/6.
  CHECK(osr::aupr(make_set({0.9, 0.8, 0.7, 0.6}, {0, 2})) ==
        doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(osr::aupr(make_set({0.9, 0.8, 0.2, 0.1}, {0, 1})) == 1.0);
  // All-equal scores: one threshold, precision = prevalence.
  CHECK(osr::aupr(make_set({0.5, 0.5, 0.5, 0.5, 0.5}, {0, 1})) ==
        doctest::Approx(0.4).epsilon(1e-15));

  osr::Rng rng(2026);
  int checked = 0;
  while (checked < 50) {
    const ScoreSet s = random_tied_set(rng, 3 + static_cast<int>(rng.next_below(30)));
    if (!has_both_classes(s)) continue;
    ++checked;
    CHECK(osr::aupr(s) == doctest::Approx(aupr_by_thresholds(s)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(osr::aupr(make_set({0.1, 0.2}, {0, 1})), osr::Error);
}

TEST_CASE("fpr at tpr hand values") {
  // Perfect separation: reaching every positive costs no negatives.
  CHECK(osr::fpr_at_tpr(make_set({0.9, 0.8, 0.2, 0.1}, {0, 1}), 0.95) == 0.0);
  // One tie group holding everything: the only threshold admits all.
  CHECK(osr::fpr_at_tpr(make_set({0.5, 0.5, 0.5, 0.5}, {0, 1}), 0.95) == 1.0);
  // Mixed: descending cuts give (tpr, fpr) = (1/2, 0), (1/2, 1/2), (1, 1/2), (1, 1).
  CHECK(osr::fpr_at_tpr(make_set({0.9, 0.8, 0.7, 0.6}, {0, 2}), 0.95) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(osr::fpr_at_tpr(make_set({0.9, 0.8, 0.7, 0.6}, {0, 2}), 0.5) == 0.0);
  CHECK_THROWS_AS(osr::fpr_at_tpr(make_set({0.9, 0.1}, {0}), 0.0), osr::Error);
  CHECK_THROWS_AS(osr::fpr_at_tpr(make_set({0.9, 0.1}, {0}), 1.5), osr::Error);
}

TEST_CASE("risk-coverage groups ties and tracks running error rate") {
  // scores [4, 3, 3, 1], correctness [1, 0, 1, 1]:
  // cut 4 -> coverage 1/4 risk 0; cut 3 -> coverage 3/4 risk 1/3; cut 1 -> 1, 1/4.
  ScoreSet s;
  s.scores = {4.0, 3.0, 3.0, 1.0};
  s.is_positive = {1, 0, 1, 1};
  s.correctness = {1, 0, 1, 1};
  const std::vector<osr::RCPoint> pts = osr::risk_coverage(s);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].coverage == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pts[0].risk == 0.0);
  CHECK(pts[1].coverage == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(pts[1].risk == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(pts[2].coverage == 1.0);
  CHECK(pts[2].risk == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("per-sample selective risk points are tie-stable") {
  ScoreSet s;
  s.scores = {0.5, 0.9, 0.5, 0.1};
  s.is_positive = {1, 1, 0, 1};
  s.correctness = {1, 1, 0, 1};
  const std::vector<osr::RCPoint> pts = osr::selective_risk_points(s);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].coverage == doctest::Approx(0.25).epsilon(1e-15));
  // Ties keep input order: sample 0 (correct) enters before sample 2 (error).
  CHECK(pts[0].risk == 0.0);                                       // {1}
  CHECK(pts[1].risk == 0.0);                                       // {1, 0}
  CHECK(pts[2].risk == doctest::Approx(1.0 / 3.0).epsilon(1e-15)); // {1, 0, 2}
  CHECK(pts[3].coverage == 1.0);
  CHECK(pts[3].risk == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("aurc and its excess over hindsight on the frozen hand case") {
  // scores [4, 3, 2, 1], correctness [1, 1, 0, 1]: prefix risks 0, 0, 1/3, 1/4
  // -> aurc = 7/48. Hindsight puts the error last: 0, 0, 0, 1/4 -> 1/16.
  // Excess = 7/48 - 3/48 = 1/12.
  ScoreSet s;
  s.scores = {4.0, 3.0, 2.0, 1.0};
  s.is_positive = {1, 1, 0, 1};
  s.correctness = {1, 1, 0, 1};
  const auto [aurc, e_aurc] = osr::aurc_eaurc(s);
  CHECK(aurc == doctest::Approx(7.0 / 48.0).epsilon(1e-12));
  CHECK(e_aurc == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("aurc excess is nonnegative and vanishes for perfect confidence") {
  osr::Rng rng(2027);
  for (int trial = 0; trial < 30; ++trial) {
    const ScoreSet s = random_tied_set(rng, 4 + static_cast<int>(rng.next_below(30)));
    const auto [aurc, e_aurc] = osr::aurc_eaurc(s);
    CHECK(e_aurc >= -1e-15);
    CHECK(aurc >= 0.0);
    CHECK(aurc <= 1.0);
  }
  ScoreSet all_correct;
  all_correct.scores = {3.0, 2.0, 1.0};
  all_correct.is_positive = {1, 1, 1};
  all_correct.correctness = {1, 1, 1};
  const auto [aurc, e_aurc] = osr::aurc_eaurc(all_correct);
  CHECK(aurc == 0.0);
  CHECK(e_aurc == 0.0);
}

TEST_CASE("trapezoids over the grouped ROC reproduce the rank auroc") {
  osr::Rng rng(2028);
  int checked = 0;
  while (checked < 25) {
    const ScoreSet s = random_tied_set(rng, 30);
    if (!has_both_classes(s)) continue;
    ++checked;

    // Build the tie-grouped ROC by descending threshold.
    std::vector<std::size_t> order(s.scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
    double total_pos = 0.0;
    double total_neg = 0.0;
    for (char c : s.is_positive) (c ? total_pos : total_neg) += 1.0;
    double tp = 0.0;
    double fp = 0.0;
    double area = 0.0;
    double prev_fpr = 0.0;
    double prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
        (s.is_positive[order[j]] ? tp : fp) += 1.0;
        ++j;
      }
      const double fpr = fp / total_neg;
      const double tpr = tp / total_pos;
      area += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
      prev_fpr = fpr;
      prev_tpr = tpr;
      i = j;
    }
    CHECK(osr::auroc(s) == doctest::Approx(area).epsilon(1e-12));
  }
}

TEST_CASE("evaluate scores every sample under every rule") {
  // Identity feature map in 2-D with two prototypes; ind samples sit on their
  // prototypes, ood samples far out.
  osr::ModelParams p;
  p.dim_in = 2;
  p.feat_dim = 2;
  p.num_classes = 2;
  p.xi = 2.0;
  osr::Layer layer;
  layer.in = 2;
  layer.out = 2;
  layer.weight = {1.0, 0.0, 0.0, 1.0};
  layer.bias = {0.0, 0.0};
  p.mlp = {layer};
  p.prototypes = {2.0, 0.0, -2.0, 0.0};
  p.thresholds = {1.0, 1.0};
  p.threshold_mode = osr::ThresholdMode::learnable_shared;

  osr::Dataset ind;
  ind.dim = 2;
  ind.rows = 4;
  ind.num_known_classes = 2;
  ind.features = {2.0, 0.0, 2.1, 0.1, -2.0, 0.0, -1.9, -0.1};
  ind.labels = {0, 0, 1, 1};

  osr::Dataset ood;
  ood.dim = 2;
  ood.rows = 2;
  ood.num_known_classes = 1;
  // Both rows sit equidistant from the two prototypes; a point far along the
  // prototype axis would still fool the closed-set softmax (msp stays high),
  // so keep the geometry symmetric to get clean separation under every rule.
  ood.features = {0.0, 8.0, 0.0, -8.0};
  ood.labels = {-1, -1};

  const std::vector<osr::Rule> rules(std::begin(osr::kAllRules), std::end(osr::kAllRules));
  const osr::Evaluation ev = osr::evaluate(p, ind, ood, rules, 0.05, 0.5);

  CHECK(ev.report.accuracy == 1.0);
  CHECK(ev.report.eps == 0.05);
  CHECK(ev.report.delta == 0.5);
  REQUIRE(ev.report.per_rule.size() == rules.size());
  REQUIRE(ev.rows.size() == (ind.rows + ood.rows) * static_cast<std::int64_t>(rules.size()));

  // Sample-outer, rule-inner emission with the ind block first.
  for (std::size_t r = 0; r < ev.rows.size(); ++r) {
    const osr::ScoreRow& row = ev.rows[r];
    CHECK(row.sample_index == static_cast<std::int64_t>(r / rules.size()));
    CHECK(row.rule == rules[r % rules.size()]);
    if (row.sample_index < ind.rows) {
      CHECK(row.true_label == ind.labels[row.sample_index]);
      CHECK(row.pred_label == row.true_label);  // this layout classifies cleanly
    } else {
      CHECK(row.true_label == -1);
    }
    CHECK(std::isfinite(row.value));
  }

  // Clean separation: every rule detects perfectly here.
  for (const auto& [rule, rm] : ev.report.per_rule) {
    INFO("rule ", osr::rule_name(rule));
    CHECK(rm.ood.auroc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rm.ood.fpr95 == 0.0);
    // No misclassification among the ind rows: MisD metrics are undefined.
    CHECK(std::isnan(rm.misd.auroc));
    CHECK(std::isnan(rm.misd.fpr95));
    CHECK(rm.misd.aurc == 0.0);
    CHECK(rm.misd.e_aurc == 0.0);
  }

  // Label policing.
  osr::Dataset bad_ood = ood;
  bad_ood.labels[0] = 1;
  CHECK_THROWS_AS(osr::evaluate(p, ind, bad_ood, rules, 0.05, 0.5), osr::Error);
  osr::Dataset bad_ind = ind;
  bad_ind.labels[0] = 7;  // outside 0..K-1
  CHECK_THROWS_AS(osr::evaluate(p, bad_ind, ood, rules, 0.05, 0.5), osr::Error);
  CHECK_THROWS_AS(osr::evaluate(p, ind, ood, {}, 0.05, 0.5), osr::Error);
  CHECK_THROWS_AS(osr::evaluate(p, ind, ood, rules, -0.1, 0.5), osr::Error);
  CHECK_THROWS_AS(osr::evaluate(p, ind, ood, rules, 0.05, 1.5), osr::Error);
}

TEST_CASE("metrics json parses and serializes degenerate entries as null") {
  osr::MetricsReport report;
  report.accuracy = 0.875;
  report.eps = 0.05;
  report.delta = 0.5;
  osr::RuleMetrics rm;
  rm.ood.auroc = 0.96;
  rm.ood.aupr = 0.9;
  rm.ood.fpr95 = 0.125;
  rm.misd.auroc = std::numeric_limits<double>::quiet_NaN();
  rm.misd.fpr95 = std::numeric_limits<double>::quiet_NaN();
  rm.misd.aurc = 0.015625;
  rm.misd.e_aurc = 0.0078125;
  report.per_rule.emplace_back(osr::Rule::msp, rm);

  const std::string text = osr::metrics_to_json(report);
  const nlohmann::json doc = nlohmann::json::parse(text);
  CHECK(doc.at("accuracy").get<double>() == 0.875);
  CHECK(doc.at("eps").get<double>() == 0.05);
  CHECK(doc.at("delta").get<double>() == 0.5);
  const nlohmann::json& msp = doc.at("rules").at("msp");
  CHECK(msp.at("ood").at("auroc").get<double>() == 0.96);
  CHECK(msp.at("ood").at("aupr").get<double>() == 0.9);
  CHECK(msp.at("ood").at("fpr95").get<double>() == 0.125);
  CHECK(msp.at("misd").at("auroc").is_null());
  CHECK(msp.at("misd").at("fpr95").is_null());
  CHECK(msp.at("misd").at("aurc").get<double>() == 0.015625);
  CHECK(msp.at("misd").at("aurc_x1000").get<double>() == 15.625);
  CHECK(msp.at("misd").at("e_aurc_x1000").get<double>() == 7.8125);
}
