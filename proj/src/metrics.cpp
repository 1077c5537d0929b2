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
#include <numeric>

#include "osr/error.hpp"
#include "osr/real_fmt.hpp"

namespace osr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_scores(const ScoreSet& s, const char* where) {
  if (s.scores.empty())
    throw_error(ErrorKind::invalid_argument, std::string(where) + ": empty score set");
  if (s.is_positive.size() != s.scores.size())
    throw_error(ErrorKind::invalid_argument, std::string(where) + ": label buffer size mismatch");
  for (double v : s.scores)
    if (!std::isfinite(v))
      throw_error(ErrorKind::numeric, std::string(where) + ": non-finite score");
}

void check_both_classes(const ScoreSet& s, const char* where) {
  const auto positives = std::count(s.is_positive.begin(), s.is_positive.end(), char(1));
  if (positives == 0 || positives == static_cast<std::int64_t>(s.is_positive.size()))
    throw_error(ErrorKind::invalid_argument,
                std::string(where) + ": needs at least one positive and one negative");
}

void check_correctness(const ScoreSet& s, const char* where) {
  if (s.correctness.size() != s.scores.size())
    throw_error(ErrorKind::invalid_argument,
                std::string(where) + ": correctness buffer size mismatch");
}

// Indices sorted by score descending; original order preserved within ties.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double mean_prefix_risk(const std::vector<char>& correct_in_order) {
  const std::size_t n = correct_in_order.size();
  double errors = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!correct_in_order[i]) errors += 1.0;
    sum += errors / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(n);
}

double evaluate_or_nan(double (*metric)(const ScoreSet&), const ScoreSet& s) {
  const auto positives = std::count(s.is_positive.begin(), s.is_positive.end(), char(1));
  if (positives == 0 || positives == static_cast<std::int64_t>(s.is_positive.size())) return kNaN;
  return metric(s);
}

std::string json_real(double v) {
  return std::isfinite(v) ? real_to_string(v) : std::string("null");
}

}  // namespace

double auroc(const ScoreSet& s) {
  check_scores(s, "auroc");
  check_both_classes(s, "auroc");
  const std::size_t n = s.scores.size();
  // Tie-averaged ranks; the rank sum of the positives yields the
  // win-plus-half-tie pair count directly.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&s](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
    i = j + 1;
  }
  double rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (s.is_positive[k]) {
      rank_sum += rank[k];
      positives += 1.0;
    }
  const double negatives = static_cast<double>(n) - positives;
  const double u = rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double aupr(const ScoreSet& s) {
  check_scores(s, "aupr");
  check_both_classes(s, "aupr");
  const auto order = descending_order(s.scores);
  const double total_positives =
      static_cast<double>(std::count(s.is_positive.begin(), s.is_positive.end(), char(1)));

  double tp = 0.0;
  double fp = 0.0;
  double prev_recall = 0.0;
  double area = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (s.is_positive[order[k]]) tp += 1.0;
      else fp += 1.0;
    }
    const double recall = tp / total_positives;
    const double precision = tp / (tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return area;
}

double fpr_at_tpr(const ScoreSet& s, double tpr_target) {
  check_scores(s, "fpr_at_tpr");
  check_both_classes(s, "fpr_at_tpr");
  if (!(tpr_target > 0.0) || !(tpr_target <= 1.0))
    throw_error(ErrorKind::invalid_argument, "fpr_at_tpr: target must lie in (0, 1]");
  const auto order = descending_order(s.scores);
  const double total_positives =
      static_cast<double>(std::count(s.is_positive.begin(), s.is_positive.end(), char(1)));
  const double total_negatives = static_cast<double>(order.size()) - total_positives;

  double tp = 0.0;
  double fp = 0.0;
  double best = 1.0;
  bool reached = false;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (s.is_positive[order[k]]) tp += 1.0;
      else fp += 1.0;
    }
    if (tp / total_positives >= tpr_target) {
      const double fpr = fp / total_negatives;
      if (!reached || fpr < best) best = fpr;
      reached = true;
    }
    i = j + 1;
  }
  return best;  // the all-inclusive threshold always reaches TPR 1
}

std::vector<RCPoint> risk_coverage(const ScoreSet& s) {
  check_scores(s, "risk_coverage");
  check_correctness(s, "risk_coverage");
  const auto order = descending_order(s.scores);
  const double n = static_cast<double>(order.size());
  std::vector<RCPoint> points;
  double accepted = 0.0;
  double errors = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      accepted += 1.0;
      if (!s.correctness[order[k]]) errors += 1.0;
    }
    points.push_back({accepted / n, errors / accepted});
    i = j + 1;
  }
  return points;
}

std::vector<RCPoint> selective_risk_points(const ScoreSet& s) {
  check_scores(s, "selective_risk_points");
  check_correctness(s, "selective_risk_points");
  const auto order = descending_order(s.scores);
  const double n = static_cast<double>(order.size());
  std::vector<RCPoint> points;
  points.reserve(order.size());
  double errors = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!s.correctness[order[i]]) errors += 1.0;
    points.push_back({static_cast<double>(i + 1) / n, errors / static_cast<double>(i + 1)});
  }
  return points;
}

std::pair<double, double> aurc_eaurc(const ScoreSet& s) {
  check_scores(s, "aurc_eaurc");
  check_correctness(s, "aurc_eaurc");
  const auto order = descending_order(s.scores);
  std::vector<char> in_order(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) in_order[i] = s.correctness[order[i]];
  const double aurc = mean_prefix_risk(in_order);

  // Hindsight ordering: every correct sample before every incorrect one.
  std::vector<char> best_order = in_order;
  std::stable_sort(best_order.begin(), best_order.end(),
                   [](char a, char b) { return a > b; });
  const double optimal = mean_prefix_risk(best_order);
  return {aurc, aurc - optimal};
}

Evaluation evaluate(const ModelParams& p, const Dataset& ind_test, const Dataset& ood_test,
                    const std::vector<Rule>& rules, double eps, double delta) {
  validate_params(p);
  validate_dataset(ind_test);
  validate_dataset(ood_test);
  if (rules.empty()) throw_error(ErrorKind::invalid_argument, "evaluate: no rules requested");
  if (!(eps >= 0.0)) throw_error(ErrorKind::invalid_argument, "evaluate: eps must be >= 0");
  if (!(delta >= 0.0) || !(delta <= 1.0))
    throw_error(ErrorKind::invalid_argument, "evaluate: delta must lie in [0, 1]");
  if (ind_test.dim != p.dim_in || ood_test.dim != p.dim_in)
    throw_error(ErrorKind::invalid_argument, "evaluate: dataset dim does not match model");
  for (int label : ind_test.labels)
    if (label < 0 || label >= p.num_classes)
      throw_error(ErrorKind::data, "evaluate: ind_test label " + std::to_string(label) +
                                       " is not a known class");
  for (int label : ood_test.labels)
    if (label != -1)
      throw_error(ErrorKind::data, "evaluate: ood_test must be labelled -1 throughout");

  const std::int64_t n_ind = ind_test.rows;
  const std::int64_t n_all = n_ind + ood_test.rows;

  Evaluation out;
  out.report.eps = eps;
  out.report.delta = delta;
  out.rows.reserve(static_cast<std::size_t>(n_all) * rules.size());

  // Per-rule oriented scores over [ind | ood], plus predictions for ind.
  std::vector<std::vector<double>> rule_scores(rules.size());
  for (auto& column : rule_scores) column.reserve(n_all);
  std::vector<char> ind_correct(n_ind);

  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < n_all; ++r) {
    const bool is_ind = r < n_ind;
    const Dataset& ds = is_ind ? ind_test : ood_test;
    const std::int64_t local = is_ind ? r : r - n_ind;
    const std::vector<double> logits = active_logits(p, ds.row(local));
    const PosteriorK1 post = dste_combine(logits);
    const int pred = argmax_lowest(post.known);
    if (is_ind) {
      ind_correct[local] = pred == ds.labels[local] ? 1 : 0;
      if (ind_correct[local]) ++hits;
    }
    for (std::size_t q = 0; q < rules.size(); ++q) {
      const double value = oriented_score(rules[q], logits, post, eps);
      rule_scores[q].push_back(value);
      out.rows.push_back({r, ds.labels[local], pred, rules[q], value});
    }
  }
  out.report.accuracy = static_cast<double>(hits) / static_cast<double>(n_ind);

  for (std::size_t q = 0; q < rules.size(); ++q) {
    RuleMetrics rm;
    const std::vector<double>& all_scores = rule_scores[q];

    ScoreSet ood_set;  // positive = in-distribution
    ood_set.scores = all_scores;
    ood_set.is_positive.assign(n_all, 0);
    for (std::int64_t r = 0; r < n_ind; ++r) ood_set.is_positive[r] = 1;
    rm.ood.auroc = auroc(ood_set);
    rm.ood.aupr = aupr(ood_set);

    ScoreSet ood_flagging;  // positive = out-of-distribution, flagged by low score
    ood_flagging.scores.reserve(n_all);
    for (double v : all_scores) ood_flagging.scores.push_back(-v);
    ood_flagging.is_positive.assign(n_all, 0);
    for (std::int64_t r = n_ind; r < n_all; ++r) ood_flagging.is_positive[r] = 1;
    rm.ood.fpr95 = fpr_at_tpr(ood_flagging, 0.95);

    ScoreSet misd;  // ind only, positive = correctly classified
    misd.scores.assign(all_scores.begin(), all_scores.begin() + n_ind);
    misd.is_positive.assign(ind_correct.begin(), ind_correct.end());
    misd.correctness = ind_correct;
    rm.misd.auroc = evaluate_or_nan(auroc, misd);
    std::tie(rm.misd.aurc, rm.misd.e_aurc) = aurc_eaurc(misd);

    ScoreSet error_flagging;  // positive = misclassified, flagged by low score
    error_flagging.scores.reserve(n_ind);
    for (std::int64_t r = 0; r < n_ind; ++r) error_flagging.scores.push_back(-all_scores[r]);
    error_flagging.is_positive.resize(n_ind);
    for (std::int64_t r = 0; r < n_ind; ++r) error_flagging.is_positive[r] = ind_correct[r] ? 0 : 1;
    rm.misd.fpr95 = evaluate_or_nan(
        [](const ScoreSet& set) { return fpr_at_tpr(set, 0.95); }, error_flagging);

    out.report.per_rule.emplace_back(rules[q], rm);
  }
  return out;
}

std::string metrics_to_json(const MetricsReport& report) {
  std::string out;
  out += "{\n";
  out += "  \"accuracy\": " + json_real(report.accuracy) + ",\n";
  out += "  \"eps\": " + json_real(report.eps) + ",\n";
  out += "  \"delta\": " + json_real(report.delta) + ",\n";
  out += "  \"rules\": {\n";
  for (std::size_t i = 0; i < report.per_rule.size(); ++i) {
    const auto& [rule, rm] = report.per_rule[i];
    out += std::string("    \"") + rule_name(rule) + "\": {\n";
    out += "      \"ood\": {\"auroc\": " + json_real(rm.ood.auroc) +
           ", \"aupr\": " + json_real(rm.ood.aupr) + ", \"fpr95\": " + json_real(rm.ood.fpr95) +
           "},\n";
    out += "      \"misd\": {\"auroc\": " + json_real(rm.misd.auroc) +
           ", \"fpr95\": " + json_real(rm.misd.fpr95) + ", \"aurc\": " + json_real(rm.misd.aurc) +
           ", \"e_aurc\": " + json_real(rm.misd.e_aurc) +
           ", \"aurc_x1000\": " + json_real(rm.misd.aurc * 1000.0) +
           ", \"e_aurc_x1000\": " + json_real(rm.misd.e_aurc * 1000.0) + "}\n";
    out += i + 1 < report.per_rule.size() ? "    },\n" : "    }\n";
  }
  out += "  }\n";
  out += "}\n";
  return out;
}

}  // namespace osr
