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
#include <vector>

#include "osr/metrics.hpp"
#include "osr/trainer.hpp"

namespace osr {

struct DataConfig {
  int num_classes = 4;
  int per_class_train = 500;
  int per_class_test = 250;
  int dim = 2;
  double spread = 0.5;
  double radius = 3.0;
  int ood_count = 1000;
  double ood_inner_radius = 5.0;
  double ood_outer_radius = 6.0;
  std::uint64_t seed = 1;
};

struct EvalConfig {
  std::vector<Rule> rules = {Rule::msp, Rule::energy, Rule::maxlogit, Rule::binary_max,
                             Rule::unified};
  double eps = 0.05;
  double delta = 0.5;
};

// One JSON document drives every subcommand. Each section and field is
// optional and defaults to the values above; unknown keys are rejected and
// every complaint names the offending dotted key.
struct ExperimentConfig {
  std::string output_dir = "out";
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);

// Pipeline steps; all paths live under output_dir.
//   gen-data: train.csv, ind_test.csv, ood_test.csv
//   train:    model.json, train_log.jsonl (returns a final-epoch summary line)
//   eval:     metrics.json, scores.csv, roc.csv, rc.csv
//   curves:   roc.csv, rc.csv recomputed from an existing scores.csv
void run_gen_data(const ExperimentConfig& cfg);
std::string run_train(const ExperimentConfig& cfg);
void run_eval(const ExperimentConfig& cfg);
void run_curves(const ExperimentConfig& cfg);

// scores.csv codec and the curve files derived from it.
std::string scores_to_csv(const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> parse_scores_csv(const std::string& text, const std::string& origin);
std::string roc_csv_from_rows(const std::vector<ScoreRow>& rows);
std::string rc_csv_from_rows(const std::vector<ScoreRow>& rows);

}  // namespace osr
