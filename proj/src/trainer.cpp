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

#include "osr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "osr/error.hpp"
#include "osr/posterior.hpp"
#include "osr/real_fmt.hpp"
#include "osr/rng.hpp"

namespace osr {

namespace {

void step_group(std::vector<double>& param, const std::vector<double>& grad,
                std::vector<double>& velocity, double lr, double momentum, double decay) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + (grad[i] + decay * param[i]);
    param[i] -= lr * velocity[i];
  }
}

double train_accuracy(const ModelParams& p, const Dataset& ds) {
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < ds.rows; ++r)
    if (argmax_lowest(active_logits(p, ds.row(r))) == ds.labels[r]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ds.rows);
}

std::pair<ModelParams, TrainLog> train_single(const TrainConfig& cfg, const Dataset& train_set,
                                              const EpochObserver& observer,
                                              std::optional<double> tau_override) {
  ModelParams params = init_params(train_set.dim, cfg.hidden_sizes, cfg.feat_dim,
                                   train_set.num_known_classes, cfg.xi, cfg.threshold_mode,
                                   train_set, derive_seed(cfg.seed, 0),
                                   cfg.objective == Objective::ce);
  if (tau_override)
    std::fill(params.thresholds.begin(), params.thresholds.end(), *tau_override);
  params.active_head = cfg.objective == Objective::ce ? Head::linear : Head::cpn;

  GradientSet velocity = zero_gradients(params);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  std::vector<std::int64_t> order(train_set.rows);
  std::iota(order.begin(), order.end(), 0);

  TrainLog log;
  log.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    for (std::int64_t i = train_set.rows - 1; i > 0; --i) {
      const auto j =
          static_cast<std::int64_t>(shuffle_rng.next_below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }

    LossBreakdown epoch_sum;
    for (std::int64_t begin = 0; begin < train_set.rows; begin += cfg.batch_size) {
      const std::int64_t end = std::min<std::int64_t>(begin + cfg.batch_size, train_set.rows);
      const std::span<const std::int64_t> chunk(order.data() + begin,
                                                static_cast<std::size_t>(end - begin));
      auto [loss, grads] =
          total_loss_grad(params, train_set, chunk, cfg.objective, cfg.beta, cfg.lambda_pl);
      sgd_momentum_step(params, grads, velocity, lr, cfg.momentum, cfg.weight_decay,
                        cfg.objective);
      const auto weight = static_cast<double>(end - begin);
      epoch_sum.l_ova += loss.l_ova * weight;
      epoch_sum.l_reg += loss.l_reg * weight;
      epoch_sum.l_pl += loss.l_pl * weight;
      epoch_sum.l_dce += loss.l_dce * weight;
      epoch_sum.l_ce += loss.l_ce * weight;
      epoch_sum.total += loss.total * weight;
    }

    EpochLog entry;
    entry.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(train_set.rows);
    entry.mean_loss.l_ova = epoch_sum.l_ova * inv;
    entry.mean_loss.l_reg = epoch_sum.l_reg * inv;
    entry.mean_loss.l_pl = epoch_sum.l_pl * inv;
    entry.mean_loss.l_dce = epoch_sum.l_dce * inv;
    entry.mean_loss.l_ce = epoch_sum.l_ce * inv;
    entry.mean_loss.total = epoch_sum.total * inv;
    if (!std::isfinite(entry.mean_loss.total))
      throw_error(ErrorKind::numeric, "train: loss diverged at epoch " + std::to_string(epoch));
    entry.train_accuracy = train_accuracy(params, train_set);
    entry.lr = lr;
    log.push_back(entry);
    if (observer) observer(epoch, params);
  }

  return {std::move(params), std::move(log)};
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw_error(ErrorKind::config, "train.epochs must be >= 1");
  if (cfg.batch_size < 1) throw_error(ErrorKind::config, "train.batch_size must be >= 1");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr))
    throw_error(ErrorKind::config, "train.lr must be >= 0");
  if (!(cfg.momentum >= 0.0) || !(cfg.momentum < 1.0))
    throw_error(ErrorKind::config, "train.momentum must lie in [0, 1)");
  if (!(cfg.weight_decay >= 0.0))
    throw_error(ErrorKind::config, "train.weight_decay must be >= 0");
  if (!(cfg.lr_decay_factor > 0.0))
    throw_error(ErrorKind::config, "train.lr_decay_factor must be > 0");
  for (std::size_t i = 0; i < cfg.lr_decay_epochs.size(); ++i) {
    if (cfg.lr_decay_epochs[i] < 0)
      throw_error(ErrorKind::config, "train.lr_decay_epochs entries must be >= 0");
    if (i > 0 && cfg.lr_decay_epochs[i] <= cfg.lr_decay_epochs[i - 1])
      throw_error(ErrorKind::config, "train.lr_decay_epochs must be strictly increasing");
  }
  if (!(cfg.beta >= 0.0) || !(cfg.beta <= 1.0))
    throw_error(ErrorKind::config, "train.beta must lie in [0, 1]");
  if (!(cfg.lambda_pl >= 0.0)) throw_error(ErrorKind::config, "train.lambda_pl must be >= 0");
  if (!(cfg.xi > 0.0)) throw_error(ErrorKind::config, "model.xi must be > 0");
  if (cfg.feat_dim < 1) throw_error(ErrorKind::config, "model.feat_dim must be >= 1");
  for (int width : cfg.hidden_sizes)
    if (width < 1) throw_error(ErrorKind::config, "model.hidden_sizes entries must be >= 1");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw_error(ErrorKind::invalid_argument, "lr_at_epoch: epoch must be >= 0");
  double lr = cfg.lr;
  for (const int decay_epoch : cfg.lr_decay_epochs)
    if (decay_epoch <= epoch) lr *= cfg.lr_decay_factor;
  return lr;
}

void sgd_momentum_step(ModelParams& p, const GradientSet& grads, GradientSet& velocity,
                       double lr, double momentum, double weight_decay, Objective objective) {
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    step_group(p.mlp[l].weight, grads.mlp[l].weight, velocity.mlp[l].weight, lr, momentum,
               weight_decay);
    step_group(p.mlp[l].bias, grads.mlp[l].bias, velocity.mlp[l].bias, lr, momentum, 0.0);
  }
  if (objective == Objective::ce) {
    if (!p.linear_head)
      throw_error(ErrorKind::config, "sgd_momentum_step: ce needs a linear head");
    step_group(p.linear_head->weight, grads.linear_head.weight, velocity.linear_head.weight, lr,
               momentum, weight_decay);
    step_group(p.linear_head->bias, grads.linear_head.bias, velocity.linear_head.bias, lr,
               momentum, 0.0);
    return;
  }
  step_group(p.prototypes, grads.prototypes, velocity.prototypes, lr, momentum, 0.0);
  if (p.threshold_mode != ThresholdMode::constant_shared)
    step_group(p.thresholds, grads.thresholds, velocity.thresholds, lr, momentum, 0.0);
}

std::pair<ModelParams, TrainLog> train(const TrainConfig& cfg, const Dataset& train_set,
                                       const EpochObserver& observer) {
  validate_train_config(cfg);
  validate_dataset(train_set);

  if (cfg.threshold_mode == ThresholdMode::constant_shared) {
    TrainConfig phase1 = cfg;
    phase1.threshold_mode = ThresholdMode::learnable_shared;
    const auto fitted = train_single(phase1, train_set, {}, std::nullopt);
    const double learned_tau = fitted.first.thresholds[0];
    return train_single(cfg, train_set, observer, learned_tau);
  }
  return train_single(cfg, train_set, observer, std::nullopt);
}

std::string train_log_to_jsonl(const TrainLog& log) {
  std::string out;
  for (const EpochLog& e : log) {
    out += "{\"epoch\": " + std::to_string(e.epoch) + ", \"lr\": " + real_to_string(e.lr);
    out += ", \"l_ova\": " + real_to_string(e.mean_loss.l_ova);
    out += ", \"l_reg\": " + real_to_string(e.mean_loss.l_reg);
    out += ", \"l_pl\": " + real_to_string(e.mean_loss.l_pl);
    out += ", \"l_dce\": " + real_to_string(e.mean_loss.l_dce);
    out += ", \"l_ce\": " + real_to_string(e.mean_loss.l_ce);
    out += ", \"total\": " + real_to_string(e.mean_loss.total);
    out += ", \"train_accuracy\": " + real_to_string(e.train_accuracy);
    out += "}\n";
  }
  return out;
}

}  // namespace osr
