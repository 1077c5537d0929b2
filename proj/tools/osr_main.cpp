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

// Command-line front end. All real work happens behind the C API; this file
// only assembles the configuration document (config file plus --set
// overrides) and maps statuses to exit codes: 0 success, 2 usage or
// configuration, 3 data or io, 4 numeric or internal.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "openset.h"

namespace {

using nlohmann::json;

int exit_code_for(osr_status status) {
  switch (status) {
    case OSR_OK:
      return 0;
    case OSR_ERR_INVALID_ARGUMENT:
    case OSR_ERR_CONFIG:
      return 2;
    case OSR_ERR_DATA:
    case OSR_ERR_IO:
      return 3;
    default:
      return 4;
  }
}

std::vector<std::string> split_dotted(const std::string& key) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(key);
  while (std::getline(in, part, '.')) parts.push_back(part);
  return parts;
}

// Apply one "dotted.path=value" override. The value is JSON when it parses as
// JSON (numbers, booleans, arrays, ...) and a plain string otherwise.
bool apply_override(json& doc, const std::string& assignment, std::string* err) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    *err = "--set expects key=value, got '" + assignment + "'";
    return false;
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);
  const std::vector<std::string> parts = split_dotted(key);
  for (const std::string& part : parts)
    if (part.empty()) {
      *err = "--set key '" + key + "' has an empty path segment";
      return false;
    }

  json value = json::parse(value_text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = value_text;

  json* node = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& child = (*node)[parts[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) {
      *err = "--set " + key + ": '" + parts[i] + "' is not an object";
      return false;
    }
    node = &child;
  }
  (*node)[parts.back()] = std::move(value);
  return true;
}

// Exit code 0 on success, otherwise the code to exit with (message in *err).
int load_merged_config(const std::string& config_path, const std::vector<std::string>& overrides,
                       std::string* merged, std::string* output_dir, std::string* err) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    *err = "cannot open '" + config_path + "' for reading";
    return 3;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();

  json doc = json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    *err = "'" + config_path + "' is not valid JSON";
    return 2;
  }
  if (!doc.is_object()) {
    *err = "'" + config_path + "' must hold a JSON object";
    return 2;
  }
  for (const std::string& assignment : overrides)
    if (!apply_override(doc, assignment, err)) return 2;

  *merged = doc.dump();
  if (doc.contains("output_dir") && doc["output_dir"].is_string())
    *output_dir = doc["output_dir"].get<std::string>();
  return 0;
}

int fail_with_last_error(osr_status status) {
  std::cerr << "error: " << osr_last_error() << "\n";
  return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"openset: prototype classifiers with evidence-fused rejection"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const char* config_help = "JSON configuration file";
  const char* set_help = "override a config key, e.g. --set train.lr=0.01 (repeatable)";

  CLI::App* cmd_gen = app.add_subcommand("gen-data", "generate train/test/background CSVs");
  CLI::App* cmd_train = app.add_subcommand("train", "fit a model on train.csv");
  CLI::App* cmd_eval = app.add_subcommand("eval", "score a trained model and write reports");
  CLI::App* cmd_curves = app.add_subcommand("curves", "rebuild roc.csv and rc.csv from scores.csv");
  for (CLI::App* cmd : {cmd_gen, cmd_train, cmd_eval, cmd_curves}) {
    cmd->add_option("--config", config_path, config_help)->required();
    cmd->add_option("--set", overrides, set_help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  std::string merged;
  std::string output_dir = "out";
  std::string err;
  const int load_code = load_merged_config(config_path, overrides, &merged, &output_dir, &err);
  if (load_code != 0) {
    std::cerr << "error: " << err << "\n";
    return load_code;
  }

  if (cmd_gen->parsed()) {
    const osr_status status = osr_run_gen_data(merged.c_str());
    if (status != OSR_OK) return fail_with_last_error(status);
    std::cout << "wrote train.csv, ind_test.csv, ood_test.csv under " << output_dir << "\n";
    return 0;
  }
  if (cmd_train->parsed()) {
    char* summary = nullptr;
    const osr_status status = osr_run_train(merged.c_str(), &summary);
    if (status != OSR_OK) return fail_with_last_error(status);
    std::cout << summary << "\n";
    std::cout << "wrote model.json, train_log.jsonl under " << output_dir << "\n";
    osr_string_free(summary);
    return 0;
  }
  if (cmd_eval->parsed()) {
    const osr_status status = osr_run_eval(merged.c_str());
    if (status != OSR_OK) return fail_with_last_error(status);
    std::cout << "wrote metrics.json, scores.csv, roc.csv, rc.csv under " << output_dir << "\n";
    return 0;
  }
  const osr_status status = osr_run_curves(merged.c_str());
  if (status != OSR_OK) return fail_with_last_error(status);
  std::cout << "wrote roc.csv, rc.csv under " << output_dir << "\n";
  return 0;
}
