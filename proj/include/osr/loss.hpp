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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "osr/dataset.hpp"
#include "osr/model.hpp"
#include "osr/posterior.hpp"

namespace osr {

// dce:    distance softmax cross-entropy (+ lambda * prototype pull)
// ova:    sum of per-class binary cross-entropies (+ lambda * prototype pull)
// hybrid: beta * ova + (1 - beta) * combined-posterior cross-entropy
//         (+ lambda * prototype pull)
// ce:     plain softmax cross-entropy over the linear head; trains the MLP and
//         the head only, prototypes and thresholds stay untouched
enum class Objective { dce, ova, hybrid, ce };

const char* objective_name(Objective objective);
Objective objective_from_name(const std::string& name);

struct LossBreakdown {
  double l_ova = 0.0;
  double l_reg = 0.0;
  double l_pl = 0.0;
  double l_dce = 0.0;
  double l_ce = 0.0;
  double total = 0.0;
};

// Gradient buffers shaped like the parameters. Under shared threshold modes
// every thresholds entry holds the summed scalar gradient of the one shared
// variable; under constant_shared the entries are zero.
struct GradientSet {
  std::vector<Layer> mlp;
  std::vector<double> prototypes;
  std::vector<double> thresholds;
  LinearHead linear_head;
};

GradientSet zero_gradients(const ModelParams& p);

double ova_loss(const std::vector<double>& binary_probs, int y);
double reg_loss(const PosteriorK1& post, int y);
double prototype_loss(const std::vector<double>& feature, const ModelParams& p, int y);
double dce_loss(const std::vector<double>& sq_dists, double xi, int y);
double ce_loss(const std::vector<double>& linear_logits, int y);

// Single-sample weighted loss.
LossBreakdown total_loss(const ModelParams& p, const double* x, int y, Objective objective,
                         double beta, double lambda_pl);

// Mean loss and mean gradients over the given rows (all rows in the overload
// without indices). Every label must be a known class.
std::pair<LossBreakdown, GradientSet> total_loss_grad(const ModelParams& p, const Dataset& batch,
                                                      std::span<const std::int64_t> rows,
                                                      Objective objective, double beta,
                                                      double lambda_pl);
std::pair<LossBreakdown, GradientSet> total_loss_grad(const ModelParams& p, const Dataset& batch,
                                                      Objective objective, double beta,
                                                      double lambda_pl);

// Central differences (f(x + h e_k) - f(x - h e_k)) / (2h), one entry per
// coordinate. Deliberately knows nothing about models or analytic gradients.
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& at, double h);

// Flat view of the parameters the given objective actually trains, in a fixed
// order: MLP weights/biases, then prototypes and thresholds (one slot for a
// shared threshold, none for a constant one) for the prototype objectives, or
// the linear head for ce.
std::size_t trainable_count(const ModelParams& p, Objective objective);
std::vector<double> flatten_trainable(const ModelParams& p, Objective objective);
void unflatten_trainable(ModelParams& p, Objective objective, const std::vector<double>& flat);
std::vector<double> flatten_gradients(const ModelParams& p, Objective objective,
                                      const GradientSet& grads);

}  // namespace osr
