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
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "osr/error.hpp"
#include "osr/real_fmt.hpp"
#include "osr/rejection.hpp"
#include "osr/rng.hpp"

namespace osr {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) {
  throw_error(ErrorKind::config, what);
}

void require_object(const json& node, const std::string& path) {
  if (!node.is_object()) config_error(path + " must be an object");
}

void reject_unknown_keys(const json& obj, const std::string& prefix,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) config_error("unknown key '" + prefix + item.key() + "'");
  }
}

std::string dotted(const std::string& prefix, const char* key) { return prefix + key; }

void get_real(const json& obj, const std::string& prefix, const char* key, double* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) config_error(dotted(prefix, key) + " must be a number");
  *out = it->get<double>();
  if (!std::isfinite(*out)) config_error(dotted(prefix, key) + " must be finite");
}

void get_int(const json& obj, const std::string& prefix, const char* key, int* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer() && !it->is_number_unsigned())
    config_error(dotted(prefix, key) + " must be an integer");
  const std::int64_t wide = it->get<std::int64_t>();
  if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
    config_error(dotted(prefix, key) + " is out of range");
  *out = static_cast<int>(wide);
}

void get_seed(const json& obj, const std::string& prefix, const char* key, std::uint64_t* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_unsigned())
    config_error(dotted(prefix, key) + " must be a non-negative integer");
  *out = it->get<std::uint64_t>();
}

void get_string(const json& obj, const std::string& prefix, const char* key, std::string* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_string()) config_error(dotted(prefix, key) + " must be a string");
  *out = it->get<std::string>();
}

void get_int_array(const json& obj, const std::string& prefix, const char* key,
                   std::vector<int>* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) config_error(dotted(prefix, key) + " must be an array of integers");
  std::vector<int> values;
  for (const auto& entry : *it) {
    if (!entry.is_number_integer() && !entry.is_number_unsigned())
      config_error(dotted(prefix, key) + " must be an array of integers");
    const std::int64_t wide = entry.get<std::int64_t>();
    if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
      config_error(dotted(prefix, key) + " has an out-of-range entry");
    values.push_back(static_cast<int>(wide));
  }
  *out = std::move(values);
}

void parse_data_section(const json& obj, DataConfig* data) {
  const std::string prefix = "data.";
  require_object(obj, "data");
  reject_unknown_keys(obj, prefix,
                      {"num_classes", "per_class_train", "per_class_test", "dim", "spread",
                       "radius", "ood_count", "ood_inner_radius", "ood_outer_radius", "seed"});
  get_int(obj, prefix, "num_classes", &data->num_classes);
  get_int(obj, prefix, "per_class_train", &data->per_class_train);
  get_int(obj, prefix, "per_class_test", &data->per_class_test);
  get_int(obj, prefix, "dim", &data->dim);
  get_real(obj, prefix, "spread", &data->spread);
  get_real(obj, prefix, "radius", &data->radius);
  get_int(obj, prefix, "ood_count", &data->ood_count);
  get_real(obj, prefix, "ood_inner_radius", &data->ood_inner_radius);
  get_real(obj, prefix, "ood_outer_radius", &data->ood_outer_radius);
  get_seed(obj, prefix, "seed", &data->seed);
}

void parse_model_section(const json& obj, TrainConfig* train) {
  const std::string prefix = "model.";
  require_object(obj, "model");
  reject_unknown_keys(obj, prefix, {"hidden_sizes", "feat_dim", "xi", "threshold_mode"});
  get_int_array(obj, prefix, "hidden_sizes", &train->hidden_sizes);
  get_int(obj, prefix, "feat_dim", &train->feat_dim);
  get_real(obj, prefix, "xi", &train->xi);
  std::string mode;
  get_string(obj, prefix, "threshold_mode", &mode);
  if (!mode.empty()) {
    try {
      train->threshold_mode = threshold_mode_from_name(mode);
    } catch (const Error&) {
      config_error("model.threshold_mode: unknown mode '" + mode + "'");
    }
  }
}

void parse_train_section(const json& obj, TrainConfig* train) {
  const std::string prefix = "train.";
  require_object(obj, "train");
  reject_unknown_keys(obj, prefix,
                      {"objective", "beta", "lambda_pl", "epochs", "batch_size", "lr", "momentum",
                       "weight_decay", "lr_decay_epochs", "lr_decay_factor", "seed"});
  std::string objective;
  get_string(obj, prefix, "objective", &objective);
  if (!objective.empty()) {
    try {
      train->objective = objective_from_name(objective);
    } catch (const Error&) {
      config_error("train.objective: unknown objective '" + objective + "'");
    }
  }
  get_real(obj, prefix, "beta", &train->beta);
  get_real(obj, prefix, "lambda_pl", &train->lambda_pl);
  get_int(obj, prefix, "epochs", &train->epochs);
  get_int(obj, prefix, "batch_size", &train->batch_size);
  get_real(obj, prefix, "lr", &train->lr);
  get_real(obj, prefix, "momentum", &train->momentum);
  get_real(obj, prefix, "weight_decay", &train->weight_decay);
  get_int_array(obj, prefix, "lr_decay_epochs", &train->lr_decay_epochs);
  get_real(obj, prefix, "lr_decay_factor", &train->lr_decay_factor);
  get_seed(obj, prefix, "seed", &train->seed);
}

void parse_eval_section(const json& obj, EvalConfig* eval) {
  const std::string prefix = "eval.";
  require_object(obj, "eval");
  reject_unknown_keys(obj, prefix, {"rules", "eps", "delta"});
  auto it = obj.find("rules");
  if (it != obj.end()) {
    if (!it->is_array()) config_error("eval.rules must be an array of rule names");
    std::vector<Rule> rules;
    for (const auto& entry : *it) {
      if (!entry.is_string()) config_error("eval.rules must be an array of rule names");
      const std::string name = entry.get<std::string>();
      Rule rule;
      try {
        rule = rule_from_name(name);
      } catch (const Error&) {
        config_error("eval.rules: unknown rule '" + name + "'");
      }
      if (std::find(rules.begin(), rules.end(), rule) != rules.end())
        config_error("eval.rules lists '" + name + "' twice");
      rules.push_back(rule);
    }
    eval->rules = std::move(rules);
  }
  get_real(obj, prefix, "eps", &eval->eps);
  get_real(obj, prefix, "delta", &eval->delta);
}

void validate_data_config(const DataConfig& d) {
  if (d.num_classes < 1) config_error("data.num_classes must be >= 1");
  if (d.per_class_train < 1) config_error("data.per_class_train must be >= 1");
  if (d.per_class_test < 1) config_error("data.per_class_test must be >= 1");
  if (d.dim < 2) config_error("data.dim must be >= 2");
  if (!(d.spread > 0.0)) config_error("data.spread must be > 0");
  if (!(d.radius > 0.0)) config_error("data.radius must be > 0");
  if (d.ood_count < 1) config_error("data.ood_count must be >= 1");
  if (!(d.ood_inner_radius > 0.0)) config_error("data.ood_inner_radius must be > 0");
  if (!(d.ood_outer_radius > d.ood_inner_radius))
    config_error("data.ood_outer_radius must exceed data.ood_inner_radius");
}

void validate_eval_config(const EvalConfig& e) {
  if (e.rules.empty()) config_error("eval.rules must not be empty");
  if (!(e.eps >= 0.0)) config_error("eval.eps must be >= 0");
  if (!(e.delta >= 0.0) || !(e.delta <= 1.0)) config_error("eval.delta must lie in [0, 1]");
}

std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorKind::io, "cannot open '" + path + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw_error(ErrorKind::io, "write failed for '" + path + "'");
}

void ensure_output_dir(const std::string& dir) {
  if (dir.empty()) config_error("output_dir must not be empty");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_error(ErrorKind::io, "cannot create directory '" + dir + "': " + ec.message());
}

[[noreturn]] void scores_error(const std::string& origin, std::int64_t line,
                               const std::string& what) {
  throw_error(ErrorKind::data, origin + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::int64_t parse_int_cell(const std::string& cell, const std::string& origin, std::int64_t line,
                            const char* column) {
  if (cell.empty()) scores_error(origin, line, std::string(column) + " cell is empty");
  char* end = nullptr;
  errno = 0;
  const long long value = std::strtoll(cell.c_str(), &end, 10);
  if (errno != 0 || end != cell.c_str() + cell.size())
    scores_error(origin, line, std::string(column) + " '" + cell + "' is not an integer");
  return static_cast<std::int64_t>(value);
}

// Rows for one rule, grouped in first-appearance order.
struct RuleGroup {
  Rule rule = Rule::msp;
  std::vector<std::size_t> rows;
};

std::vector<RuleGroup> group_by_rule(const std::vector<ScoreRow>& rows) {
  std::vector<RuleGroup> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RuleGroup* group = nullptr;
    for (auto& g : groups)
      if (g.rule == rows[i].rule) {
        group = &g;
        break;
      }
    if (group == nullptr) {
      groups.push_back({rows[i].rule, {}});
      group = &groups.back();
    }
    group->rows.push_back(i);
  }
  return groups;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  require_object(doc, "config root");
  reject_unknown_keys(doc, "", {"output_dir", "data", "model", "train", "eval"});

  ExperimentConfig cfg;
  get_string(doc, "", "output_dir", &cfg.output_dir);
  if (auto it = doc.find("data"); it != doc.end()) parse_data_section(*it, &cfg.data);
  if (auto it = doc.find("model"); it != doc.end()) parse_model_section(*it, &cfg.train);
  if (auto it = doc.find("train"); it != doc.end()) parse_train_section(*it, &cfg.train);
  if (auto it = doc.find("eval"); it != doc.end()) parse_eval_section(*it, &cfg.eval);

  if (cfg.output_dir.empty()) config_error("output_dir must not be empty");
  validate_data_config(cfg.data);
  validate_train_config(cfg.train);
  validate_eval_config(cfg.eval);
  return cfg;
}

void run_gen_data(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg.output_dir);
  const DataConfig& d = cfg.data;
  const Dataset train_set = gen_gaussian_mixture(d.num_classes, d.per_class_train, d.dim,
                                                 d.spread, d.radius, derive_seed(d.seed, 0));
  const Dataset ind_test = gen_gaussian_mixture(d.num_classes, d.per_class_test, d.dim, d.spread,
                                                d.radius, derive_seed(d.seed, 1));
  const Dataset ood_test =
      gen_ood_ring(d.ood_count, d.dim, d.ood_inner_radius, d.ood_outer_radius, derive_seed(d.seed, 2));
  save_csv(train_set, join_path(cfg.output_dir, "train.csv"));
  save_csv(ind_test, join_path(cfg.output_dir, "ind_test.csv"));
  save_csv(ood_test, join_path(cfg.output_dir, "ood_test.csv"));
}

std::string run_train(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg.output_dir);
  const Dataset train_set = load_csv(join_path(cfg.output_dir, "train.csv"));
  auto [params, log] = train(cfg.train, train_set);
  save_checkpoint(params, join_path(cfg.output_dir, "model.json"));
  write_file(join_path(cfg.output_dir, "train_log.jsonl"), train_log_to_jsonl(log));
  const EpochLog& last = log.back();
  std::string summary = "trained ";
  summary += objective_name(cfg.train.objective);
  summary += " for " + std::to_string(log.size()) + " epochs: loss " +
             real_to_string(last.mean_loss.total) + ", train accuracy " +
             real_to_string(last.train_accuracy);
  return summary;
}

void run_eval(const ExperimentConfig& cfg) {
  const ModelParams params = load_checkpoint(join_path(cfg.output_dir, "model.json"));
  const Dataset ind_test = load_csv(join_path(cfg.output_dir, "ind_test.csv"));
  const Dataset ood_test = load_csv(join_path(cfg.output_dir, "ood_test.csv"));
  const Evaluation ev =
      evaluate(params, ind_test, ood_test, cfg.eval.rules, cfg.eval.eps, cfg.eval.delta);
  write_file(join_path(cfg.output_dir, "metrics.json"), metrics_to_json(ev.report));
  write_file(join_path(cfg.output_dir, "scores.csv"), scores_to_csv(ev.rows));
  write_file(join_path(cfg.output_dir, "roc.csv"), roc_csv_from_rows(ev.rows));
  write_file(join_path(cfg.output_dir, "rc.csv"), rc_csv_from_rows(ev.rows));
}

void run_curves(const ExperimentConfig& cfg) {
  const std::string path = join_path(cfg.output_dir, "scores.csv");
  const std::vector<ScoreRow> rows = parse_scores_csv(read_file(path), path);
  write_file(join_path(cfg.output_dir, "roc.csv"), roc_csv_from_rows(rows));
  write_file(join_path(cfg.output_dir, "rc.csv"), rc_csv_from_rows(rows));
}

std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  std::string out = "sample_index,true_label,pred_label,rule,score\n";
  for (const ScoreRow& row : rows) {
    out += std::to_string(row.sample_index);
    out += ',';
    out += std::to_string(row.true_label);
    out += ',';
    out += std::to_string(row.pred_label);
    out += ',';
    out += rule_name(row.rule);
    out += ',';
    append_real(out, row.value);
    out += '\n';
  }
  return out;
}

std::vector<ScoreRow> parse_scores_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) scores_error(origin, 1, "malformed header: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sample_index,true_label,pred_label,rule,score")
    scores_error(origin, 1, "malformed header: expected sample_index,true_label,pred_label,rule,score");

  std::vector<ScoreRow> rows;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) scores_error(origin, line_no, "empty row");
    const std::vector<std::string> cells = split_cells(line);
    if (cells.size() != 5)
      scores_error(origin, line_no,
                   "expected 5 cells, found " + std::to_string(cells.size()));
    ScoreRow row;
    row.sample_index = parse_int_cell(cells[0], origin, line_no, "sample_index");
    const std::int64_t true_label = parse_int_cell(cells[1], origin, line_no, "true_label");
    const std::int64_t pred_label = parse_int_cell(cells[2], origin, line_no, "pred_label");
    if (true_label < -1) scores_error(origin, line_no, "true_label is below -1");
    if (pred_label < 0) scores_error(origin, line_no, "pred_label must be >= 0");
    row.true_label = static_cast<int>(true_label);
    row.pred_label = static_cast<int>(pred_label);
    try {
      row.rule = rule_from_name(cells[3]);
    } catch (const Error&) {
      scores_error(origin, line_no, "unknown rule '" + cells[3] + "'");
    }
    char* end = nullptr;
    errno = 0;
    row.value = std::strtod(cells[4].c_str(), &end);
    if (cells[4].empty() || end != cells[4].c_str() + cells[4].size() || !std::isfinite(row.value))
      scores_error(origin, line_no, "score '" + cells[4] + "' is not a finite number");
    rows.push_back(row);
  }
  if (rows.empty()) throw_error(ErrorKind::data, origin + ": no score rows");
  return rows;
}

std::string roc_csv_from_rows(const std::vector<ScoreRow>& rows) {
  std::string out = "rule,fpr,tpr\n";
  for (const RuleGroup& group : group_by_rule(rows)) {
    std::vector<std::size_t> order = group.rows;
    std::stable_sort(order.begin(), order.end(), [&rows](std::size_t a, std::size_t b) {
      return rows[a].value > rows[b].value;
    });
    double positives = 0.0;
    double negatives = 0.0;
    for (std::size_t i : order) {
      if (rows[i].true_label == -1)
        negatives += 1.0;
      else
        positives += 1.0;
    }
    if (positives == 0.0 || negatives == 0.0)
      throw_error(ErrorKind::data, std::string("roc: rule '") + rule_name(group.rule) +
                                       "' needs both in-distribution and"
                                       " out-of-distribution rows");
    const std::string prefix = std::string(rule_name(group.rule)) + ",";
    out += prefix + "0,0\n";
    double tp = 0.0;
    double fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j < order.size() && rows[order[j]].value == rows[order[i]].value) {
        if (rows[order[j]].true_label == -1)
          fp += 1.0;
        else
          tp += 1.0;
        ++j;
      }
      out += prefix;
      append_real(out, fp / negatives);
      out += ',';
      append_real(out, tp / positives);
      out += '\n';
      i = j;
    }
  }
  return out;
}

std::string rc_csv_from_rows(const std::vector<ScoreRow>& rows) {
  std::string out = "rule,coverage,risk\n";
  for (const RuleGroup& group : group_by_rule(rows)) {
    ScoreSet set;
    for (std::size_t i : group.rows) {
      const ScoreRow& row = rows[i];
      if (row.true_label == -1) continue;
      set.scores.push_back(row.value);
      const char correct = row.pred_label == row.true_label ? 1 : 0;
      set.is_positive.push_back(correct);
      set.correctness.push_back(correct);
    }
    if (set.scores.empty())
      throw_error(ErrorKind::data, std::string("risk-coverage: rule '") + rule_name(group.rule) +
                                       "' has no in-distribution rows");
    const std::string prefix = std::string(rule_name(group.rule)) + ",";
    for (const RCPoint& point : selective_risk_points(set)) {
      out += prefix;
      append_real(out, point.coverage);
      out += ',';
      append_real(out, point.risk);
      out += '\n';
    }
  }
  return out;
}

}  // namespace osr
