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

#include "osr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "osr/error.hpp"
#include "osr/metrics.hpp"
#include "osr/rng.hpp"
#include "test_util.hpp"

using osr::ExperimentConfig;
using osr::Rule;
using osr::ScoreRow;

namespace {

std::string parse_error(const std::string& text) {
  try {
    osr::parse_experiment_config(text);
  } catch (const osr::Error& e) {
    CHECK(e.kind() == osr::ErrorKind::config);
    return e.what();
  }
  return "";
}

std::string small_pipeline_json(const std::string& output_dir) {
  return std::string("{") + "\"output_dir\": \"" + output_dir + "\"," +
         R"(
    "data": {"num_classes": 3, "per_class_train": 30, "per_class_test": 20,
             "ood_count": 50, "seed": 11},
    "model": {"hidden_sizes": [8], "feat_dim": 4},
    "train": {"epochs": 3, "batch_size": 32, "lr": 0.02, "seed": 7,
              "lr_decay_epochs": []}
  })";
}

}  // namespace

TEST_CASE("an empty config document yields the defaults") {
  const ExperimentConfig cfg = osr::parse_experiment_config("{}");
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.data.num_classes == 4);
  CHECK(cfg.data.per_class_train == 500);
  CHECK(cfg.data.per_class_test == 250);
  CHECK(cfg.data.dim == 2);
  CHECK(cfg.data.spread == 0.5);
  CHECK(cfg.data.radius == 3.0);
  CHECK(cfg.data.ood_count == 1000);
  CHECK(cfg.data.ood_inner_radius == 5.0);
  CHECK(cfg.data.ood_outer_radius == 6.0);
  CHECK(cfg.data.seed == 1);
  CHECK(cfg.train.objective == osr::Objective::hybrid);
  CHECK(cfg.train.beta == 0.95);
  CHECK(cfg.train.lambda_pl == 0.05);
  CHECK(cfg.train.xi == 2.0);
  CHECK(cfg.train.epochs == 60);
  CHECK(cfg.train.threshold_mode == osr::ThresholdMode::learnable_per_class);
  CHECK(cfg.train.hidden_sizes == std::vector<int>{32, 32});
  CHECK(cfg.train.feat_dim == 8);
  CHECK(cfg.eval.rules.size() == 5);
  CHECK(cfg.eval.eps == 0.05);
  CHECK(cfg.eval.delta == 0.5);
}

TEST_CASE("every section round-trips explicit values") {
  const ExperimentConfig cfg = osr::parse_experiment_config(R"({
    "output_dir": "scratch",
    "data": {"num_classes": 3, "per_class_train": 12, "per_class_test": 6, "dim": 4,
             "spread": 0.25, "radius": 2.0, "ood_count": 9, "ood_inner_radius": 4.0,
             "ood_outer_radius": 4.5, "seed": 99},
    "model": {"hidden_sizes": [16, 8], "feat_dim": 3, "xi": 1.25,
              "threshold_mode": "constant_shared"},
    "train": {"objective": "dce", "beta": 0.5, "lambda_pl": 0.2, "epochs": 7,
              "batch_size": 4, "lr": 0.1, "momentum": 0.8, "weight_decay": 0.001,
              "lr_decay_epochs": [3, 5], "lr_decay_factor": 0.5, "seed": 41},
    "eval": {"rules": ["unified", "msp"], "eps": 0.1, "delta": 0.25}
  })");
  CHECK(cfg.output_dir == "scratch");
  CHECK(cfg.data.num_classes == 3);
  CHECK(cfg.data.dim == 4);
  CHECK(cfg.data.seed == 99);
  CHECK(cfg.train.hidden_sizes == std::vector<int>{16, 8});
  CHECK(cfg.train.feat_dim == 3);
  CHECK(cfg.train.xi == 1.25);
  CHECK(cfg.train.threshold_mode == osr::ThresholdMode::constant_shared);
  CHECK(cfg.train.objective == osr::Objective::dce);
  CHECK(cfg.train.beta == 0.5);
  CHECK(cfg.train.lr_decay_epochs == std::vector<int>{3, 5});
  CHECK(cfg.train.seed == 41);
  REQUIRE(cfg.eval.rules.size() == 2);
  CHECK(cfg.eval.rules[0] == Rule::unified);
  CHECK(cfg.eval.rules[1] == Rule::msp);
  CHECK(cfg.eval.eps == 0.1);
  CHECK(cfg.eval.delta == 0.25);
}

TEST_CASE("config complaints name the offending dotted key") {
  CHECK(parse_error(R"({"bogus": 1})") == "unknown key 'bogus'");
  CHECK(parse_error(R"({"data": {"foo": 1}})") == "unknown key 'data.foo'");
  CHECK(parse_error(R"({"model": {"layers": []}})") == "unknown key 'model.layers'");
  CHECK(parse_error(R"({"train": {"alpha": 2}})") == "unknown key 'train.alpha'");
  CHECK(parse_error(R"({"eval": {"rule": "msp"}})") == "unknown key 'eval.rule'");

  CHECK(parse_error(R"({"output_dir": 5})") == "output_dir must be a string");
  CHECK(parse_error(R"({"data": 3})") == "data must be an object");
  CHECK(parse_error(R"({"data": {"spread": "wide"}})") == "data.spread must be a number");
  CHECK(parse_error(R"({"data": {"spread": 0}})") == "data.spread must be > 0");
  CHECK(parse_error(R"({"train": {"epochs": 2.5}})") == "train.epochs must be an integer");
  CHECK(parse_error(R"({"train": {"seed": -1}})") ==
        "train.seed must be a non-negative integer");
  CHECK(parse_error(R"({"data": {"seed": 1.5}})") ==
        "data.seed must be a non-negative integer");
  CHECK(parse_error(R"({"model": {"hidden_sizes": [4, "x"]}})") ==
        "model.hidden_sizes must be an array of integers");
  CHECK(parse_error(R"({"model": {"hidden_sizes": 4}})") ==
        "model.hidden_sizes must be an array of integers");
  CHECK(parse_error(R"({"data": {"ood_inner_radius": 5, "ood_outer_radius": 5}})") ==
        "data.ood_outer_radius must exceed data.ood_inner_radius");
  CHECK(parse_error(R"({"data": {"dim": 1}})") == "data.dim must be >= 2");

  CHECK(parse_error(R"({"model": {"threshold_mode": "frozen"}})") ==
        "model.threshold_mode: unknown mode 'frozen'");
  CHECK(parse_error(R"({"train": {"objective": "mse"}})") ==
        "train.objective: unknown objective 'mse'");
  CHECK(parse_error(R"({"eval": {"rules": ["entropy"]}})") ==
        "eval.rules: unknown rule 'entropy'");
  CHECK(parse_error(R"({"eval": {"rules": ["msp", "msp"]}})") == "eval.rules lists 'msp' twice");
  CHECK(parse_error(R"({"eval": {"rules": []}})") == "eval.rules must not be empty");
  CHECK(parse_error(R"({"eval": {"rules": "msp"}})") ==
        "eval.rules must be an array of rule names");
  CHECK(parse_error(R"({"eval": {"delta": 1.5}})") == "eval.delta must lie in [0, 1]");
  CHECK(parse_error(R"({"output_dir": ""})") == "output_dir must not be empty");

  CHECK(parse_error("[]") == "config root must be an object");
  CHECK(parse_error("{ not json").rfind("config is not valid JSON", 0) == 0);

  // Validation of merged values also goes through the dotted names.
  CHECK(parse_error(R"({"train": {"momentum": 1.0}})") == "train.momentum must lie in [0, 1)");
  CHECK(parse_error(R"({"model": {"xi": 0}})") == "model.xi must be > 0");
}

TEST_CASE("score rows survive the csv round trip bit for bit") {
  std::vector<ScoreRow> rows;
  rows.push_back({0, 0, 0, Rule::msp, 1.0 / 3.0});
  rows.push_back({0, 0, 0, Rule::energy, -123.456789012345678});
  rows.push_back({1, 2, 1, Rule::msp, 1e300});
  rows.push_back({1, 2, 1, Rule::energy, -2.5e-300});
  rows.push_back({2, -1, 0, Rule::msp, 0.0});
  rows.push_back({2, -1, 0, Rule::energy, 0.9999999999999999});

  const std::string text = osr::scores_to_csv(rows);
  const std::vector<ScoreRow> parsed = osr::parse_scores_csv(text, "mem");
  REQUIRE(parsed.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].sample_index == rows[i].sample_index);
    CHECK(parsed[i].true_label == rows[i].true_label);
    CHECK(parsed[i].pred_label == rows[i].pred_label);
    CHECK(parsed[i].rule == rows[i].rule);
    CHECK(parsed[i].value == rows[i].value);  // bitwise
  }
  CHECK(osr::scores_to_csv(parsed) == text);
}

TEST_CASE("score csv parse failures carry file and line") {
  const auto message_of = [](const std::string& text) {
    try {
      osr::parse_scores_csv(text, "s.csv");
    } catch (const osr::Error& e) {
      CHECK(e.kind() == osr::ErrorKind::data);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of("").rfind("s.csv:1: malformed header", 0) == 0);
  CHECK(message_of("wrong,header\n1,2\n").rfind("s.csv:1: malformed header", 0) == 0);
  const std::string header = "sample_index,true_label,pred_label,rule,score\n";
  CHECK(message_of(header) == "s.csv: no score rows");
  CHECK(message_of(header + "0,0,0,msp\n") == "s.csv:2: expected 5 cells, found 4");
  CHECK(message_of(header + "0,0,0,msp,0.5\n1,0,0,argmax,0.5\n") ==
        "s.csv:3: unknown rule 'argmax'");
  CHECK(message_of(header + "0,-2,0,msp,0.5\n") == "s.csv:2: true_label is below -1");
  CHECK(message_of(header + "0,0,-1,msp,0.5\n") == "s.csv:2: pred_label must be >= 0");
  CHECK(message_of(header + "x,0,0,msp,0.5\n") ==
        "s.csv:2: sample_index 'x' is not an integer");
  CHECK(message_of(header + "0,0,0,msp,inf\n") == "s.csv:2: score 'inf' is not a finite number");
  CHECK(message_of(header + "0,0,0,msp,\n") == "s.csv:2: score '' is not a finite number");
  CHECK(message_of(header + "\n") == "s.csv:2: empty row");

  // Windows line endings are accepted.
  const std::vector<ScoreRow> rows =
      osr::parse_scores_csv("sample_index,true_label,pred_label,rule,score\r\n0,0,0,msp,0.5\r\n",
                            "crlf.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].value == 0.5);
}

TEST_CASE("the roc csv walks descending thresholds from the origin") {
  std::vector<ScoreRow> rows;
  rows.push_back({0, 0, 0, Rule::msp, 0.9});
  rows.push_back({1, -1, 0, Rule::msp, 0.6});
  rows.push_back({2, 1, 1, Rule::msp, 0.4});
  rows.push_back({3, -1, 0, Rule::msp, 0.1});
  CHECK(osr::roc_csv_from_rows(rows) ==
        "rule,fpr,tpr\n"
        "msp,0,0\n"
        "msp,0,0.5\n"
        "msp,0.5,0.5\n"
        "msp,0.5,1\n"
        "msp,1,1\n");

  // A tie across the classes enters as one group.
  std::vector<ScoreRow> tied;
  tied.push_back({0, 0, 0, Rule::energy, 0.8});
  tied.push_back({1, -1, 0, Rule::energy, 0.8});
  CHECK(osr::roc_csv_from_rows(tied) ==
        "rule,fpr,tpr\n"
        "energy,0,0\n"
        "energy,1,1\n");

  // Both blocks are required per rule.
  std::vector<ScoreRow> ind_only;
  ind_only.push_back({0, 0, 0, Rule::msp, 0.9});
  try {
    osr::roc_csv_from_rows(ind_only);
    FAIL("expected a throw");
  } catch (const osr::Error& e) {
    CHECK(e.kind() == osr::ErrorKind::data);
    CHECK(std::string(e.what()).find("msp") != std::string::npos);
  }
}

TEST_CASE("trapezoids under the roc csv reproduce the rank statistic") {
  osr::Rng rng(515);
  std::vector<ScoreRow> rows;
  osr::ScoreSet s;
  for (int i = 0; i < 60; ++i) {
    const bool ind = rng.uniform() < 0.5;
    const double value = static_cast<double>(rng.next_below(9)) / 8.0;
    rows.push_back({i, ind ? 0 : -1, 0, Rule::msp, value});
    s.scores.push_back(value);
    s.is_positive.push_back(ind ? 1 : 0);
  }
  const std::string csv = osr::roc_csv_from_rows(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  double area = 0.0;
  double prev_fpr = 0.0;
  double prev_tpr = 0.0;
  while (std::getline(in, line)) {
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = line.find(',', c1 + 1);
    const double fpr = std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
    const double tpr = std::strtod(line.substr(c2 + 1).c_str(), nullptr);
    area += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  CHECK(prev_fpr == 1.0);  // the final threshold admits everything
  CHECK(prev_tpr == 1.0);
  CHECK(area == doctest::Approx(osr::auroc(s)).epsilon(1e-12));
}

TEST_CASE("the rc csv walks per-sample coverage over the ind block only") {
  std::vector<ScoreRow> rows;
  rows.push_back({0, 0, 0, Rule::msp, 4.0});   // correct
  rows.push_back({1, 0, 1, Rule::msp, 3.0});   // error
  rows.push_back({2, 1, 1, Rule::msp, 3.0});   // correct, tied with the error
  rows.push_back({3, 1, 1, Rule::msp, 1.0});   // correct
  rows.push_back({4, -1, 0, Rule::msp, 9.0});  // ood rows never enter
  CHECK(osr::rc_csv_from_rows(rows) ==
        "rule,coverage,risk\n"
        "msp,0.25,0\n"
        "msp,0.5,0.5\n"
        "msp,0.75,0.33333333333333331\n"
        "msp,1,0.25\n");

  std::vector<ScoreRow> ood_only;
  ood_only.push_back({0, -1, 0, Rule::msp, 0.9});
  try {
    osr::rc_csv_from_rows(ood_only);
    FAIL("expected a throw");
  } catch (const osr::Error& e) {
    CHECK(e.kind() == osr::ErrorKind::data);
    CHECK(std::string(e.what()).find("no in-distribution rows") != std::string::npos);
  }
}

TEST_CASE("the pipeline runs end to end and is reproducible file for file") {
  const std::string dir1 = osr_test::scratch_dir("exp_tmp", "run1");
  const std::string dir2 = osr_test::scratch_dir("exp_tmp", "run2");

  const ExperimentConfig cfg1 = osr::parse_experiment_config(small_pipeline_json(dir1));
  osr::run_gen_data(cfg1);
  for (const char* name : {"train.csv", "ind_test.csv", "ood_test.csv"})
    CHECK(osr_test::file_exists(dir1 + "/" + name));

  const std::string summary = osr::run_train(cfg1);
  CHECK(summary.rfind("trained hybrid for 3 epochs", 0) == 0);
  CHECK(osr_test::file_exists(dir1 + "/model.json"));
  const std::string log_text = osr_test::slurp(dir1 + "/train_log.jsonl");
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == 3);

  osr::run_eval(cfg1);
  const std::string metrics_text = osr_test::slurp(dir1 + "/metrics.json");
  const nlohmann::json metrics = nlohmann::json::parse(metrics_text);
  CHECK(metrics.at("rules").size() == 5);
  CHECK(metrics.at("accuracy").is_number());

  const std::string scores_text = osr_test::slurp(dir1 + "/scores.csv");
  const std::vector<ScoreRow> rows = osr::parse_scores_csv(scores_text, "scores.csv");
  CHECK(rows.size() == (3 * 20 + 50) * 5);

  // curves recomputed from scores.csv match the ones eval wrote.
  const std::string roc_before = osr_test::slurp(dir1 + "/roc.csv");
  const std::string rc_before = osr_test::slurp(dir1 + "/rc.csv");
  osr::run_curves(cfg1);
  CHECK(osr_test::slurp(dir1 + "/roc.csv") == roc_before);
  CHECK(osr_test::slurp(dir1 + "/rc.csv") == rc_before);

  // The whole pipeline replays byte-identically into a fresh directory.
  const ExperimentConfig cfg2 = osr::parse_experiment_config(small_pipeline_json(dir2));
  osr::run_gen_data(cfg2);
  osr::run_train(cfg2);
  osr::run_eval(cfg2);
  for (const char* name : {"train.csv", "ind_test.csv", "ood_test.csv", "model.json",
                           "train_log.jsonl", "metrics.json", "scores.csv", "roc.csv", "rc.csv"})
    CHECK(osr_test::slurp(dir1 + "/" + name) == osr_test::slurp(dir2 + "/" + name));
}

TEST_CASE("missing pipeline inputs surface as io errors") {
  const std::string dir = osr_test::scratch_dir("exp_tmp", "empty");
  ExperimentConfig cfg = osr::parse_experiment_config("{}");
  cfg.output_dir = dir;
  const auto kind_of = [](const auto& fn) {
    try {
      fn();
    } catch (const osr::Error& e) {
      return e.kind();
    }
    return osr::ErrorKind::internal;
  };
  CHECK(kind_of([&] { osr::run_train(cfg); }) == osr::ErrorKind::io);
  CHECK(kind_of([&] { osr::run_eval(cfg); }) == osr::ErrorKind::io);
  CHECK(kind_of([&] { osr::run_curves(cfg); }) == osr::ErrorKind::io);
}
