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

#include "osr/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "osr/error.hpp"
#include "osr/real_fmt.hpp"
#include "osr/rng.hpp"

namespace osr {

namespace {

using nlohmann::json;

void matvec(const Layer& layer, const std::vector<double>& in, std::vector<double>& out) {
  out.assign(layer.out, 0.0);
  for (int r = 0; r < layer.out; ++r) {
    const double* w = layer.weight.data() + static_cast<std::size_t>(r) * layer.in;
    double acc = layer.bias[r];
    for (int c = 0; c < layer.in; ++c) acc += w[c] * in[c];
    out[r] = acc;
  }
}

void append_real_array(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_real(out, values[i]);
  }
  out += ']';
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& origin, const std::string& where) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw_error(ErrorKind::data,
                  origin + ": unknown key '" + where + item.key() + "'");
}

std::vector<double> real_array(const json& obj, const char* key, std::size_t expected,
                               const std::string& origin) {
  const auto& arr = obj.at(key);
  if (!arr.is_array() || arr.size() != expected)
    throw_error(ErrorKind::data, origin + ": '" + key + "' must be an array of " +
                                     std::to_string(expected) + " reals");
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : arr) {
    if (!v.is_number()) throw_error(ErrorKind::data, origin + ": non-numeric entry in '" + key + "'");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw_error(ErrorKind::data, origin + ": non-finite entry in '" + key + "'");
    out.push_back(d);
  }
  return out;
}

}  // namespace

const char* threshold_mode_name(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::constant_shared: return "constant_shared";
    case ThresholdMode::learnable_shared: return "learnable_shared";
    case ThresholdMode::learnable_per_class: return "learnable_per_class";
  }
  throw_error(ErrorKind::internal, "threshold_mode_name: bad enum value");
}

ThresholdMode threshold_mode_from_name(const std::string& name) {
  if (name == "constant_shared") return ThresholdMode::constant_shared;
  if (name == "learnable_shared") return ThresholdMode::learnable_shared;
  if (name == "learnable_per_class") return ThresholdMode::learnable_per_class;
  throw_error(ErrorKind::config, "unknown threshold_mode '" + name + "'");
}

void validate_params(const ModelParams& p) {
  if (p.dim_in < 1 || p.feat_dim < 1 || p.num_classes < 1)
    throw_error(ErrorKind::invalid_argument, "model: dimensions must be positive");
  if (!(p.xi > 0.0) || !std::isfinite(p.xi))
    throw_error(ErrorKind::invalid_argument, "model: xi must be > 0");
  if (p.mlp.empty()) throw_error(ErrorKind::invalid_argument, "model: needs at least one layer");
  int prev = p.dim_in;
  for (const Layer& layer : p.mlp) {
    if (layer.in != prev || layer.out < 1)
      throw_error(ErrorKind::invalid_argument, "model: inconsistent layer dimensions");
    if (layer.weight.size() != static_cast<std::size_t>(layer.in) * layer.out ||
        layer.bias.size() != static_cast<std::size_t>(layer.out))
      throw_error(ErrorKind::invalid_argument, "model: layer buffer sizes do not match dims");
    prev = layer.out;
  }
  if (prev != p.feat_dim)
    throw_error(ErrorKind::invalid_argument, "model: final layer width must equal feat_dim");
  if (p.prototypes.size() != static_cast<std::size_t>(p.num_classes) * p.feat_dim)
    throw_error(ErrorKind::invalid_argument, "model: prototype buffer must be K*feat_dim");
  if (p.thresholds.size() != static_cast<std::size_t>(p.num_classes))
    throw_error(ErrorKind::invalid_argument, "model: threshold buffer must hold K entries");
  if (p.threshold_mode != ThresholdMode::learnable_per_class)
    for (double t : p.thresholds)
      if (t != p.thresholds[0])
        throw_error(ErrorKind::internal, "model: shared thresholds drifted apart");
  if (p.linear_head) {
    if (p.linear_head->weight.size() != static_cast<std::size_t>(p.num_classes) * p.feat_dim ||
        p.linear_head->bias.size() != static_cast<std::size_t>(p.num_classes))
      throw_error(ErrorKind::invalid_argument, "model: linear head buffers must be K*feat_dim / K");
  } else if (p.active_head == Head::linear) {
    throw_error(ErrorKind::config, "model: linear head selected but absent");
  }
}

ModelParams init_params(int dim_in, const std::vector<int>& hidden_sizes, int feat_dim,
                        int num_classes, double xi, ThresholdMode mode,
                        const Dataset& warmup, std::uint64_t seed, bool with_linear_head) {
  validate_dataset(warmup);
  if (warmup.dim != dim_in)
    throw_error(ErrorKind::invalid_argument, "init_params: warmup dim does not match dim_in");
  if (warmup.num_known_classes < num_classes)
    throw_error(ErrorKind::data, "init_params: warmup has fewer classes than the model");
  std::vector<std::int64_t> class_counts(num_classes, 0);
  for (int label : warmup.labels) {
    if (label < 0 || label >= num_classes)
      throw_error(ErrorKind::data,
                  "init_params: warmup label " + std::to_string(label) + " outside 0.." +
                      std::to_string(num_classes - 1));
    ++class_counts[label];
  }
  for (int c = 0; c < num_classes; ++c)
    if (class_counts[c] == 0)
      throw_error(ErrorKind::data, "init_params: class " + std::to_string(c) +
                                       " missing from the warmup set");

  ModelParams p;
  p.dim_in = dim_in;
  p.feat_dim = feat_dim;
  p.num_classes = num_classes;
  p.xi = xi;
  p.threshold_mode = mode;
  p.active_head = Head::cpn;

  Rng rng(seed);
  auto draw_layer = [&rng](int in, int out) {
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.weight.resize(static_cast<std::size_t>(in) * out);
    layer.bias.assign(out, 0.0);
    const double std_dev = std::sqrt(2.0 / in);
    for (double& w : layer.weight) w = std_dev * rng.normal();
    return layer;
  };

  int prev = dim_in;
  for (int width : hidden_sizes) {
    if (width < 1) throw_error(ErrorKind::invalid_argument, "init_params: hidden width must be >= 1");
    p.mlp.push_back(draw_layer(prev, width));
    prev = width;
  }
  p.mlp.push_back(draw_layer(prev, feat_dim));

  if (with_linear_head) {
    const Layer head = draw_layer(feat_dim, num_classes);
    p.linear_head = LinearHead{head.weight, head.bias};
  }

  // Warm start: prototypes at per-class feature means, thresholds at the mean
  // squared distance of each class to its prototype, so initial logits sit
  // near zero regardless of xi.
  p.prototypes.assign(static_cast<std::size_t>(num_classes) * feat_dim, 0.0);
  std::vector<std::vector<double>> feats(warmup.rows);
  for (std::int64_t r = 0; r < warmup.rows; ++r) {
    feats[r] = extract_features(p, warmup.row(r)).feature;
    double* proto = p.prototypes.data() + static_cast<std::size_t>(warmup.labels[r]) * feat_dim;
    for (int j = 0; j < feat_dim; ++j) proto[j] += feats[r][j];
  }
  for (int c = 0; c < num_classes; ++c) {
    double* proto = p.prototypes.data() + static_cast<std::size_t>(c) * feat_dim;
    for (int j = 0; j < feat_dim; ++j) proto[j] /= static_cast<double>(class_counts[c]);
  }

  std::vector<double> per_class_tau(num_classes, 0.0);
  for (std::int64_t r = 0; r < warmup.rows; ++r) {
    const int c = warmup.labels[r];
    const double* proto = p.prototypes.data() + static_cast<std::size_t>(c) * feat_dim;
    double d = 0.0;
    for (int j = 0; j < feat_dim; ++j) {
      const double diff = feats[r][j] - proto[j];
      d += diff * diff;
    }
    per_class_tau[c] += d;
  }
  for (int c = 0; c < num_classes; ++c) per_class_tau[c] /= static_cast<double>(class_counts[c]);

  if (mode == ThresholdMode::learnable_per_class) {
    p.thresholds = per_class_tau;
  } else {
    double mean_tau = 0.0;
    for (double t : per_class_tau) mean_tau += t;
    mean_tau /= static_cast<double>(num_classes);
    p.thresholds.assign(num_classes, mean_tau);
  }

  validate_params(p);
  return p;
}

ForwardTrace extract_features(const ModelParams& p, const double* x) {
  ForwardTrace trace;
  trace.act.emplace_back(x, x + p.dim_in);
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    std::vector<double> pre;
    matvec(p.mlp[l], trace.act.back(), pre);
    trace.pre.push_back(pre);
    if (l + 1 < p.mlp.size())
      for (double& v : pre) v = v > 0.0 ? v : 0.0;
    trace.act.push_back(std::move(pre));
  }
  trace.feature = trace.act.back();
  return trace;
}

std::vector<double> discriminant_cpn(const ModelParams& p, const std::vector<double>& feature,
                                     std::vector<double>* sq_dists_out) {
  if (feature.size() != static_cast<std::size_t>(p.feat_dim))
    throw_error(ErrorKind::invalid_argument, "discriminant_cpn: feature size mismatch");
  std::vector<double> logits(p.num_classes);
  std::vector<double> dists(p.num_classes);
  for (int c = 0; c < p.num_classes; ++c) {
    const double* proto = p.prototypes.data() + static_cast<std::size_t>(c) * p.feat_dim;
    double d = 0.0;
    for (int j = 0; j < p.feat_dim; ++j) {
      const double diff = feature[j] - proto[j];
      d += diff * diff;
    }
    dists[c] = d;
    logits[c] = -p.xi * (d - p.thresholds[c]);
  }
  if (sq_dists_out) *sq_dists_out = std::move(dists);
  return logits;
}

std::vector<double> discriminant_linear(const ModelParams& p, const std::vector<double>& feature) {
  if (!p.linear_head)
    throw_error(ErrorKind::config, "discriminant_linear: model has no linear head");
  if (feature.size() != static_cast<std::size_t>(p.feat_dim))
    throw_error(ErrorKind::invalid_argument, "discriminant_linear: feature size mismatch");
  std::vector<double> logits(p.num_classes);
  for (int c = 0; c < p.num_classes; ++c) {
    const double* w = p.linear_head->weight.data() + static_cast<std::size_t>(c) * p.feat_dim;
    double acc = p.linear_head->bias[c];
    for (int j = 0; j < p.feat_dim; ++j) acc += w[j] * feature[j];
    logits[c] = acc;
  }
  return logits;
}

ForwardTrace forward(const ModelParams& p, const double* x) {
  ForwardTrace trace = extract_features(p, x);
  if (p.active_head == Head::cpn)
    trace.logits = discriminant_cpn(p, trace.feature, &trace.sq_dists);
  else
    trace.logits = discriminant_linear(p, trace.feature);
  return trace;
}

std::vector<double> active_logits(const ModelParams& p, const double* x) {
  return forward(p, x).logits;
}

std::string checkpoint_to_json(const ModelParams& p) {
  validate_params(p);
  std::string out;
  out += "{\n";
  out += "  \"format\": \"openset-model-v1\",\n";
  out += "  \"dim_in\": " + std::to_string(p.dim_in) + ",\n";
  out += "  \"feat_dim\": " + std::to_string(p.feat_dim) + ",\n";
  out += "  \"num_classes\": " + std::to_string(p.num_classes) + ",\n";
  out += "  \"xi\": " + real_to_string(p.xi) + ",\n";
  out += std::string("  \"threshold_mode\": \"") + threshold_mode_name(p.threshold_mode) + "\",\n";
  out += std::string("  \"active_head\": \"") + (p.active_head == Head::cpn ? "cpn" : "linear") +
         "\",\n";
  out += "  \"mlp\": [\n";
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    const Layer& layer = p.mlp[l];
    out += "    {\"in\": " + std::to_string(layer.in) + ", \"out\": " + std::to_string(layer.out) +
           ", \"weight\": ";
    append_real_array(out, layer.weight);
    out += ", \"bias\": ";
    append_real_array(out, layer.bias);
    out += l + 1 < p.mlp.size() ? "},\n" : "}\n";
  }
  out += "  ],\n";
  out += "  \"prototypes\": ";
  append_real_array(out, p.prototypes);
  out += ",\n  \"thresholds\": ";
  append_real_array(out, p.thresholds);
  out += ",\n  \"linear_head\": ";
  if (p.linear_head) {
    out += "{\"weight\": ";
    append_real_array(out, p.linear_head->weight);
    out += ", \"bias\": ";
    append_real_array(out, p.linear_head->bias);
    out += "}";
  } else {
    out += "null";
  }
  out += "\n}\n";
  return out;
}

namespace {

ModelParams extract_checkpoint(const json& doc, const std::string& origin) {
  if (!doc.is_object()) throw_error(ErrorKind::data, origin + ": checkpoint must be a JSON object");
  reject_unknown_keys(doc,
                      {"format", "dim_in", "feat_dim", "num_classes", "xi", "threshold_mode",
                       "active_head", "mlp", "prototypes", "thresholds", "linear_head"},
                      origin, "");
  for (const char* key : {"format", "dim_in", "feat_dim", "num_classes", "xi", "threshold_mode",
                          "active_head", "mlp", "prototypes", "thresholds", "linear_head"})
    if (!doc.contains(key)) throw_error(ErrorKind::data, origin + ": missing key '" + key + "'");
  if (doc.at("format").get<std::string>() != "openset-model-v1")
    throw_error(ErrorKind::data, origin + ": unsupported checkpoint format");

  ModelParams p;
  p.dim_in = doc.at("dim_in").get<int>();
  p.feat_dim = doc.at("feat_dim").get<int>();
  p.num_classes = doc.at("num_classes").get<int>();
  p.xi = doc.at("xi").get<double>();
  p.threshold_mode = threshold_mode_from_name(doc.at("threshold_mode").get<std::string>());
  const std::string head = doc.at("active_head").get<std::string>();
  if (head == "cpn") p.active_head = Head::cpn;
  else if (head == "linear") p.active_head = Head::linear;
  else throw_error(ErrorKind::data, origin + ": unknown active_head '" + head + "'");

  const auto& layers = doc.at("mlp");
  if (!layers.is_array() || layers.empty())
    throw_error(ErrorKind::data, origin + ": 'mlp' must be a non-empty array");
  for (const auto& entry : layers) {
    if (!entry.is_object()) throw_error(ErrorKind::data, origin + ": layer entries must be objects");
    reject_unknown_keys(entry, {"in", "out", "weight", "bias"}, origin, "mlp.");
    Layer layer;
    layer.in = entry.at("in").get<int>();
    layer.out = entry.at("out").get<int>();
    if (layer.in < 1 || layer.out < 1)
      throw_error(ErrorKind::data, origin + ": layer dims must be positive");
    layer.weight = real_array(entry, "weight",
                              static_cast<std::size_t>(layer.in) * layer.out, origin);
    layer.bias = real_array(entry, "bias", static_cast<std::size_t>(layer.out), origin);
    p.mlp.push_back(std::move(layer));
  }
  p.prototypes = real_array(doc, "prototypes",
                            static_cast<std::size_t>(p.num_classes) * p.feat_dim, origin);
  p.thresholds = real_array(doc, "thresholds", static_cast<std::size_t>(p.num_classes), origin);
  const auto& head_obj = doc.at("linear_head");
  if (!head_obj.is_null()) {
    if (!head_obj.is_object())
      throw_error(ErrorKind::data, origin + ": 'linear_head' must be an object or null");
    reject_unknown_keys(head_obj, {"weight", "bias"}, origin, "linear_head.");
    LinearHead lh;
    lh.weight = real_array(head_obj, "weight",
                           static_cast<std::size_t>(p.num_classes) * p.feat_dim, origin);
    lh.bias = real_array(head_obj, "bias", static_cast<std::size_t>(p.num_classes), origin);
    p.linear_head = std::move(lh);
  }

  try {
    validate_params(p);
  } catch (const Error& e) {
    throw_error(ErrorKind::data, origin + ": " + e.what());
  }
  return p;
}

}  // namespace

ModelParams checkpoint_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
    return extract_checkpoint(doc, origin);
  } catch (const json::exception& e) {
    throw_error(ErrorKind::data, origin + ": " + e.what());
  }
}

void save_checkpoint(const ModelParams& p, const std::string& path) {
  const std::string body = checkpoint_to_json(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorKind::io, "cannot open '" + path + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw_error(ErrorKind::io, "write failed for '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str(), path);
}

}  // namespace osr
