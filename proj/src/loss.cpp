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

#include "osr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osr/error.hpp"

namespace osr {

namespace {

double clamped_log(double p) {
  return std::log(std::max(p, kProbClamp));
}

double raw_sigmoid(double g) {
  if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
  const double e = std::exp(g);
  return e / (1.0 + e);
}

void check_label(int y, int num_classes, const char* where) {
  if (y < 0 || y >= num_classes)
    throw_error(ErrorKind::data, std::string(where) + ": label " + std::to_string(y) +
                                     " is not a known class");
}

void check_weights(Objective objective, double beta, double lambda_pl) {
  if (objective == Objective::hybrid && (!(beta >= 0.0) || !(beta <= 1.0)))
    throw_error(ErrorKind::invalid_argument, "loss: beta must lie in [0, 1]");
  if (!(lambda_pl >= 0.0))
    throw_error(ErrorKind::invalid_argument, "loss: lambda_pl must be >= 0");
}

// Accumulates one sample's gradients into `grads` (raw per-class threshold
// contributions go to `dtau_raw`; the mode is applied once per batch).
struct SampleWork {
  ForwardTrace trace;
  LossBreakdown loss;
};

void backprop_feature_gradient(const ModelParams& p, const ForwardTrace& trace,
                               std::vector<double> dfeat, GradientSet& grads) {
  std::vector<double> delta = std::move(dfeat);
  for (int l = static_cast<int>(p.mlp.size()) - 1; l >= 0; --l) {
    const Layer& layer = p.mlp[l];
    // act[l+1] = relu(pre[l]) on hidden layers, pre[l] on the last one.
    if (l + 1 < static_cast<int>(p.mlp.size()))
      for (int r = 0; r < layer.out; ++r)
        if (trace.pre[l][r] <= 0.0) delta[r] = 0.0;
    Layer& g = grads.mlp[l];
    const std::vector<double>& input = trace.act[l];
    for (int r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      g.bias[r] += d;
      double* grow = g.weight.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) grow[c] += d * input[c];
    }
    if (l > 0) {
      std::vector<double> prev(layer.in, 0.0);
      for (int r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        const double* wrow = layer.weight.data() + static_cast<std::size_t>(r) * layer.in;
        for (int c = 0; c < layer.in; ++c) prev[c] += d * wrow[c];
      }
      delta = std::move(prev);
    }
  }
}

LossBreakdown sample_loss_grad(const ModelParams& p, const double* x, int y, Objective objective,
                               double beta, double lambda_pl, GradientSet& grads,
                               std::vector<double>& dtau_raw) {
  LossBreakdown loss;
  const int k = p.num_classes;

  if (objective == Objective::ce) {
    if (!p.linear_head)
      throw_error(ErrorKind::config, "loss: ce objective needs a linear head");
    ForwardTrace trace = extract_features(p, x);
    const std::vector<double> logits = discriminant_linear(p, trace.feature);
    loss.l_ce = ce_loss(logits, y);
    loss.total = loss.l_ce;

    const std::vector<double> q = softmax_closed(logits);
    std::vector<double> dfeat(p.feat_dim, 0.0);
    for (int c = 0; c < k; ++c) {
      const double dlogit = q[c] - (c == y ? 1.0 : 0.0);
      grads.linear_head.bias[c] += dlogit;
      const double* w = p.linear_head->weight.data() + static_cast<std::size_t>(c) * p.feat_dim;
      double* gw = grads.linear_head.weight.data() + static_cast<std::size_t>(c) * p.feat_dim;
      for (int j = 0; j < p.feat_dim; ++j) {
        gw[j] += dlogit * trace.feature[j];
        dfeat[j] += dlogit * w[j];
      }
    }
    backprop_feature_gradient(p, trace, std::move(dfeat), grads);
    return loss;
  }

  ForwardTrace trace = extract_features(p, x);
  std::vector<double> sq_dists;
  const std::vector<double> logits = discriminant_cpn(p, trace.feature, &sq_dists);
  const std::vector<double>& f = trace.feature;

  // dL/dlogit for the logit-based parts, dL/ddist for the distance-based one.
  std::vector<double> dlogits(k, 0.0);
  std::vector<double> ddists(k, 0.0);

  if (objective == Objective::ova || objective == Objective::hybrid) {
    const double ova_weight = objective == Objective::hybrid ? beta : 1.0;
    loss.l_ova = ova_loss(sigmoid_ova(logits), y);
    for (int i = 0; i < k; ++i)
      dlogits[i] += ova_weight * (raw_sigmoid(logits[i]) - (i == y ? 1.0 : 0.0));
    if (objective == Objective::hybrid) {
      const PosteriorK1 post = dste_combine(logits);
      loss.l_reg = reg_loss(post, y);
      for (int i = 0; i < k; ++i)
        dlogits[i] += (1.0 - beta) * (post.known[i] - (i == y ? 1.0 : 0.0));
    }
  } else {  // dce
    loss.l_dce = dce_loss(sq_dists, p.xi, y);
    std::vector<double> z(k);
    for (int i = 0; i < k; ++i) z[i] = -p.xi * sq_dists[i];
    const std::vector<double> q = softmax_closed(z);
    for (int i = 0; i < k; ++i) ddists[i] += -p.xi * (q[i] - (i == y ? 1.0 : 0.0));
  }

  loss.l_pl = prototype_loss(f, p, y);

  std::vector<double> dfeat(p.feat_dim, 0.0);
  for (int i = 0; i < k; ++i) {
    // Through the logit: dg/df = -2*xi*(f - proto), dg/dproto = +2*xi*(f - proto),
    // dg/dtau = xi. Through a raw distance: dd/df = 2*(f - proto), dd/dproto
    // is its negative.
    const double through_dist = ddists[i] - p.xi * dlogits[i];
    if (through_dist != 0.0) {
      const double* proto = p.prototypes.data() + static_cast<std::size_t>(i) * p.feat_dim;
      double* gproto = grads.prototypes.data() + static_cast<std::size_t>(i) * p.feat_dim;
      for (int j = 0; j < p.feat_dim; ++j) {
        const double diff2 = 2.0 * (f[j] - proto[j]);
        dfeat[j] += through_dist * diff2;
        gproto[j] -= through_dist * diff2;
      }
    }
    dtau_raw[i] += p.xi * dlogits[i];
  }

  if (lambda_pl > 0.0) {
    const double* proto = p.prototypes.data() + static_cast<std::size_t>(y) * p.feat_dim;
    double* gproto = grads.prototypes.data() + static_cast<std::size_t>(y) * p.feat_dim;
    for (int j = 0; j < p.feat_dim; ++j) {
      const double diff2 = 2.0 * (f[j] - proto[j]);
      dfeat[j] += lambda_pl * diff2;
      gproto[j] -= lambda_pl * diff2;
    }
  }

  switch (objective) {
    case Objective::ova:
      loss.total = loss.l_ova + lambda_pl * loss.l_pl;
      break;
    case Objective::hybrid:
      loss.total = beta * loss.l_ova + (1.0 - beta) * loss.l_reg + lambda_pl * loss.l_pl;
      break;
    case Objective::dce:
      loss.total = loss.l_dce + lambda_pl * loss.l_pl;
      break;
    case Objective::ce:
      break;  // handled above
  }

  backprop_feature_gradient(p, trace, std::move(dfeat), grads);
  return loss;
}

}  // namespace

const char* objective_name(Objective objective) {
  switch (objective) {
    case Objective::dce: return "dce";
    case Objective::ova: return "ova";
    case Objective::hybrid: return "hybrid";
    case Objective::ce: return "ce";
  }
  throw_error(ErrorKind::internal, "objective_name: bad enum value");
}

Objective objective_from_name(const std::string& name) {
  if (name == "dce") return Objective::dce;
  if (name == "ova") return Objective::ova;
  if (name == "hybrid") return Objective::hybrid;
  if (name == "ce") return Objective::ce;
  throw_error(ErrorKind::config, "unknown objective '" + name + "'");
}

GradientSet zero_gradients(const ModelParams& p) {
  GradientSet g;
  g.mlp.reserve(p.mlp.size());
  for (const Layer& layer : p.mlp) {
    Layer zero;
    zero.in = layer.in;
    zero.out = layer.out;
    zero.weight.assign(layer.weight.size(), 0.0);
    zero.bias.assign(layer.bias.size(), 0.0);
    g.mlp.push_back(std::move(zero));
  }
  g.prototypes.assign(p.prototypes.size(), 0.0);
  g.thresholds.assign(p.thresholds.size(), 0.0);
  if (p.linear_head) {
    g.linear_head.weight.assign(p.linear_head->weight.size(), 0.0);
    g.linear_head.bias.assign(p.linear_head->bias.size(), 0.0);
  }
  return g;
}

double ova_loss(const std::vector<double>& binary_probs, int y) {
  check_label(y, static_cast<int>(binary_probs.size()), "ova_loss");
  double loss = 0.0;
  for (int i = 0; i < static_cast<int>(binary_probs.size()); ++i) {
    const double p = binary_probs[i];
    if (!(p > 0.0) || !(p < 1.0))
      throw_error(ErrorKind::invalid_argument, "ova_loss: probabilities must lie in (0, 1)");
    loss -= i == y ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

double reg_loss(const PosteriorK1& post, int y) {
  check_label(y, static_cast<int>(post.known.size()), "reg_loss");
  return -clamped_log(post.known[y]);
}

double prototype_loss(const std::vector<double>& feature, const ModelParams& p, int y) {
  check_label(y, p.num_classes, "prototype_loss");
  if (feature.size() != static_cast<std::size_t>(p.feat_dim))
    throw_error(ErrorKind::invalid_argument, "prototype_loss: feature size mismatch");
  const double* proto = p.prototypes.data() + static_cast<std::size_t>(y) * p.feat_dim;
  double d = 0.0;
  for (int j = 0; j < p.feat_dim; ++j) {
    const double diff = feature[j] - proto[j];
    d += diff * diff;
  }
  return d;
}

double dce_loss(const std::vector<double>& sq_dists, double xi, int y) {
  check_label(y, static_cast<int>(sq_dists.size()), "dce_loss");
  if (!(xi > 0.0)) throw_error(ErrorKind::invalid_argument, "dce_loss: xi must be > 0");
  std::vector<double> z(sq_dists.size());
  for (std::size_t i = 0; i < sq_dists.size(); ++i) z[i] = -xi * sq_dists[i];
  return -clamped_log(softmax_closed(z)[y]);
}

double ce_loss(const std::vector<double>& linear_logits, int y) {
  check_label(y, static_cast<int>(linear_logits.size()), "ce_loss");
  return -clamped_log(softmax_closed(linear_logits)[y]);
}

LossBreakdown total_loss(const ModelParams& p, const double* x, int y, Objective objective,
                         double beta, double lambda_pl) {
  check_weights(objective, beta, lambda_pl);
  check_label(y, p.num_classes, "total_loss");
  GradientSet scratch = zero_gradients(p);
  std::vector<double> dtau_raw(p.num_classes, 0.0);
  return sample_loss_grad(p, x, y, objective, beta, lambda_pl, scratch, dtau_raw);
}

std::pair<LossBreakdown, GradientSet> total_loss_grad(const ModelParams& p, const Dataset& batch,
                                                      std::span<const std::int64_t> rows,
                                                      Objective objective, double beta,
                                                      double lambda_pl) {
  check_weights(objective, beta, lambda_pl);
  if (batch.dim != p.dim_in)
    throw_error(ErrorKind::invalid_argument, "total_loss_grad: batch dim does not match model");
  if (rows.empty()) throw_error(ErrorKind::invalid_argument, "total_loss_grad: empty batch");

  GradientSet grads = zero_gradients(p);
  std::vector<double> dtau_raw(p.num_classes, 0.0);
  LossBreakdown sum;
  for (const std::int64_t r : rows) {
    if (r < 0 || r >= batch.rows)
      throw_error(ErrorKind::invalid_argument, "total_loss_grad: row index out of range");
    check_label(batch.labels[r], p.num_classes, "total_loss_grad");
    const LossBreakdown one =
        sample_loss_grad(p, batch.row(r), batch.labels[r], objective, beta, lambda_pl, grads,
                         dtau_raw);
    sum.l_ova += one.l_ova;
    sum.l_reg += one.l_reg;
    sum.l_pl += one.l_pl;
    sum.l_dce += one.l_dce;
    sum.l_ce += one.l_ce;
    sum.total += one.total;
  }

  const double inv = 1.0 / static_cast<double>(rows.size());
  sum.l_ova *= inv;
  sum.l_reg *= inv;
  sum.l_pl *= inv;
  sum.l_dce *= inv;
  sum.l_ce *= inv;
  sum.total *= inv;

  for (Layer& layer : grads.mlp) {
    for (double& v : layer.weight) v *= inv;
    for (double& v : layer.bias) v *= inv;
  }
  for (double& v : grads.prototypes) v *= inv;
  for (double& v : grads.linear_head.weight) v *= inv;
  for (double& v : grads.linear_head.bias) v *= inv;

  switch (p.threshold_mode) {
    case ThresholdMode::learnable_per_class:
      for (int c = 0; c < p.num_classes; ++c) grads.thresholds[c] = dtau_raw[c] * inv;
      break;
    case ThresholdMode::learnable_shared: {
      const double total = std::accumulate(dtau_raw.begin(), dtau_raw.end(), 0.0) * inv;
      std::fill(grads.thresholds.begin(), grads.thresholds.end(), total);
      break;
    }
    case ThresholdMode::constant_shared:
      break;  // stays zero
  }

  return {sum, std::move(grads)};
}

std::pair<LossBreakdown, GradientSet> total_loss_grad(const ModelParams& p, const Dataset& batch,
                                                      Objective objective, double beta,
                                                      double lambda_pl) {
  std::vector<std::int64_t> rows(batch.rows);
  std::iota(rows.begin(), rows.end(), 0);
  return total_loss_grad(p, batch, rows, objective, beta, lambda_pl);
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& at, double h) {
  if (!(h > 0.0)) throw_error(ErrorKind::invalid_argument, "finite_diff_grad: h must be > 0");
  std::vector<double> grad(at.size());
  std::vector<double> probe = at;
  for (std::size_t k = 0; k < at.size(); ++k) {
    probe[k] = at[k] + h;
    const double up = f(probe);
    probe[k] = at[k] - h;
    const double down = f(probe);
    probe[k] = at[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace {

int shared_tau_slots(const ModelParams& p) {
  switch (p.threshold_mode) {
    case ThresholdMode::learnable_per_class: return p.num_classes;
    case ThresholdMode::learnable_shared: return 1;
    case ThresholdMode::constant_shared: return 0;
  }
  throw_error(ErrorKind::internal, "shared_tau_slots: bad enum value");
}

}  // namespace

std::size_t trainable_count(const ModelParams& p, Objective objective) {
  std::size_t n = 0;
  for (const Layer& layer : p.mlp) n += layer.weight.size() + layer.bias.size();
  if (objective == Objective::ce) {
    if (!p.linear_head) throw_error(ErrorKind::config, "trainable_count: ce needs a linear head");
    n += p.linear_head->weight.size() + p.linear_head->bias.size();
  } else {
    n += p.prototypes.size();
    n += static_cast<std::size_t>(shared_tau_slots(p));
  }
  return n;
}

std::vector<double> flatten_trainable(const ModelParams& p, Objective objective) {
  std::vector<double> flat;
  flat.reserve(trainable_count(p, objective));
  for (const Layer& layer : p.mlp) {
    flat.insert(flat.end(), layer.weight.begin(), layer.weight.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  if (objective == Objective::ce) {
    if (!p.linear_head) throw_error(ErrorKind::config, "flatten_trainable: ce needs a linear head");
    flat.insert(flat.end(), p.linear_head->weight.begin(), p.linear_head->weight.end());
    flat.insert(flat.end(), p.linear_head->bias.begin(), p.linear_head->bias.end());
  } else {
    flat.insert(flat.end(), p.prototypes.begin(), p.prototypes.end());
    const int slots = shared_tau_slots(p);
    for (int i = 0; i < slots; ++i) flat.push_back(p.thresholds[i]);
  }
  return flat;
}

void unflatten_trainable(ModelParams& p, Objective objective, const std::vector<double>& flat) {
  if (flat.size() != trainable_count(p, objective))
    throw_error(ErrorKind::invalid_argument, "unflatten_trainable: size mismatch");
  std::size_t pos = 0;
  for (Layer& layer : p.mlp) {
    std::copy_n(flat.begin() + pos, layer.weight.size(), layer.weight.begin());
    pos += layer.weight.size();
    std::copy_n(flat.begin() + pos, layer.bias.size(), layer.bias.begin());
    pos += layer.bias.size();
  }
  if (objective == Objective::ce) {
    std::copy_n(flat.begin() + pos, p.linear_head->weight.size(), p.linear_head->weight.begin());
    pos += p.linear_head->weight.size();
    std::copy_n(flat.begin() + pos, p.linear_head->bias.size(), p.linear_head->bias.begin());
    pos += p.linear_head->bias.size();
  } else {
    std::copy_n(flat.begin() + pos, p.prototypes.size(), p.prototypes.begin());
    pos += p.prototypes.size();
    if (p.threshold_mode == ThresholdMode::learnable_per_class) {
      std::copy_n(flat.begin() + pos, p.thresholds.size(), p.thresholds.begin());
      pos += p.thresholds.size();
    } else if (p.threshold_mode == ThresholdMode::learnable_shared) {
      std::fill(p.thresholds.begin(), p.thresholds.end(), flat[pos]);
      ++pos;
    }
  }
}

std::vector<double> flatten_gradients(const ModelParams& p, Objective objective,
                                      const GradientSet& grads) {
  std::vector<double> flat;
  flat.reserve(trainable_count(p, objective));
  for (const Layer& layer : grads.mlp) {
    flat.insert(flat.end(), layer.weight.begin(), layer.weight.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  if (objective == Objective::ce) {
    flat.insert(flat.end(), grads.linear_head.weight.begin(), grads.linear_head.weight.end());
    flat.insert(flat.end(), grads.linear_head.bias.begin(), grads.linear_head.bias.end());
  } else {
    flat.insert(flat.end(), grads.prototypes.begin(), grads.prototypes.end());
    const int slots = shared_tau_slots(p);
    for (int i = 0; i < slots; ++i) flat.push_back(grads.thresholds[i]);
  }
  return flat;
}

}  // namespace osr
