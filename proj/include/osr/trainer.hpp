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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "osr/dataset.hpp"
#include "osr/loss.hpp"
#include "osr/model.hpp"

namespace osr {

struct TrainConfig {
  Objective objective = Objective::hybrid;
  double beta = 0.95;
  double lambda_pl = 0.05;
  double xi = 2.0;
  int epochs = 60;
  int batch_size = 64;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 2e-4;
  std::vector<int> lr_decay_epochs = {30, 45};
  double lr_decay_factor = 0.1;
  ThresholdMode threshold_mode = ThresholdMode::learnable_per_class;
  std::uint64_t seed = 1;
  std::vector<int> hidden_sizes = {32, 32};
  int feat_dim = 8;
};

void validate_train_config(const TrainConfig& cfg);

// lr * factor^(number of decay epochs <= epoch).
double lr_at_epoch(const TrainConfig& cfg, int epoch);

// v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v.
// Weight decay touches MLP weights and the linear-head weight only, never
// biases, prototypes or thresholds. Only the groups the objective trains are
// updated; a constant threshold mode leaves thresholds untouched.
void sgd_momentum_step(ModelParams& p, const GradientSet& grads, GradientSet& velocity,
                       double lr, double momentum, double weight_decay, Objective objective);

struct EpochLog {
  int epoch = 0;
  LossBreakdown mean_loss;   // per-sample mean over the epoch's batches
  double train_accuracy = 0.0;
  double lr = 0.0;
};

using TrainLog = std::vector<EpochLog>;
using EpochObserver = std::function<void(int epoch, const ModelParams& p)>;

// Seeded shuffled mini-batch SGD (last partial batch kept). The model is
// warm-initialized from the training set itself. A constant_shared config
// first runs a full learnable_shared fit, then re-initializes and retrains
// everything else with the threshold frozen at the learned value; the
// returned log covers the second fit.
std::pair<ModelParams, TrainLog> train(const TrainConfig& cfg, const Dataset& train_set,
                                       const EpochObserver& observer = {});

// One JSON object per epoch, reals with 17 significant digits.
std::string train_log_to_jsonl(const TrainLog& log);

}  // namespace osr
