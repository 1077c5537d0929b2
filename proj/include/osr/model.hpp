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
#include <optional>
#include <string>
#include <vector>

#include "osr/dataset.hpp"

namespace osr {

enum class ThresholdMode { constant_shared, learnable_shared, learnable_per_class };
enum class Head { cpn, linear };

const char* threshold_mode_name(ThresholdMode mode);
ThresholdMode threshold_mode_from_name(const std::string& name);

// Dense layer, weight row-major with shape [out][in]. Hidden layers apply
// ReLU; the final layer is linear.
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
};

struct LinearHead {
  std::vector<double> weight;  // num_classes x feat_dim, row-major
  std::vector<double> bias;    // num_classes
};

struct ModelParams {
  int dim_in = 0;
  int feat_dim = 0;
  int num_classes = 0;
  double xi = 1.0;  // fixed temperature of the prototype discriminant, not trained
  ThresholdMode threshold_mode = ThresholdMode::learnable_per_class;
  Head active_head = Head::cpn;
  std::vector<Layer> mlp;
  std::vector<double> prototypes;  // num_classes x feat_dim, row-major
  std::vector<double> thresholds;  // num_classes; all equal under shared modes
  std::optional<LinearHead> linear_head;
};

struct ForwardTrace {
  std::vector<std::vector<double>> pre;  // per-layer pre-activations
  std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = layer l output
  std::vector<double> feature;           // copy of act.back()
  std::vector<double> sq_dists;          // per-class squared distances (prototype head)
  std::vector<double> logits;            // active-head logits
};

void validate_params(const ModelParams& p);

// Fresh model: MLP weights from a zero-mean Gaussian with std sqrt(2/fan_in)
// drawn row-major layer by layer, biases zero; prototypes set to per-class
// means of the warmup features under the just-initialized extractor, each
// threshold to the mean squared distance of its class to that prototype
// (shared modes take the across-class mean of those values); the optional
// linear head drawn like an extra layer after the prototypes.
ModelParams init_params(int dim_in, const std::vector<int>& hidden_sizes, int feat_dim,
                        int num_classes, double xi, ThresholdMode mode,
                        const Dataset& warmup, std::uint64_t seed, bool with_linear_head);

// Runs the MLP; fills pre/act/feature of the trace.
ForwardTrace extract_features(const ModelParams& p, const double* x);

// g_i = -xi * (||f - proto_i||^2 - tau_i).
std::vector<double> discriminant_cpn(const ModelParams& p, const std::vector<double>& feature,
                                     std::vector<double>* sq_dists_out = nullptr);

// g = W f + b over the optional linear head.
std::vector<double> discriminant_linear(const ModelParams& p, const std::vector<double>& feature);

// extract_features plus the active head; fills sq_dists/logits.
ForwardTrace forward(const ModelParams& p, const double* x);

std::vector<double> active_logits(const ModelParams& p, const double* x);

// Checkpoint codec: one JSON document holding dimensions, modes and every
// parameter array row-major, reals with 17 significant digits so a reload is
// bit-exact.
std::string checkpoint_to_json(const ModelParams& p);
ModelParams checkpoint_from_json(const std::string& text, const std::string& origin);
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace osr
