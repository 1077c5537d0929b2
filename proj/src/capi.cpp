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

#include "openset.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <utility>

#include "osr/dataset.hpp"
#include "osr/error.hpp"
#include "osr/experiment.hpp"
#include "osr/metrics.hpp"
#include "osr/model.hpp"
#include "osr/posterior.hpp"
#include "osr/trainer.hpp"

struct osr_dataset {
  osr::Dataset impl;
};

struct osr_model {
  osr::ModelParams impl;
};

namespace {

thread_local std::string t_last_error;

osr_status status_for(osr::ErrorKind kind) {
  switch (kind) {
    case osr::ErrorKind::invalid_argument:
      return OSR_ERR_INVALID_ARGUMENT;
    case osr::ErrorKind::config:
      return OSR_ERR_CONFIG;
    case osr::ErrorKind::data:
      return OSR_ERR_DATA;
    case osr::ErrorKind::io:
      return OSR_ERR_IO;
    case osr::ErrorKind::numeric:
      return OSR_ERR_NUMERIC;
    case osr::ErrorKind::internal:
      return OSR_ERR_INTERNAL;
  }
  return OSR_ERR_INTERNAL;
}

template <typename Fn>
osr_status guarded(Fn&& fn) {
  t_last_error.clear();
  try {
    fn();
    return OSR_OK;
  } catch (const osr::Error& e) {
    t_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return OSR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return OSR_ERR_INTERNAL;
  }
}

[[noreturn]] void require_failed(const std::string& what) {
  osr::throw_error(osr::ErrorKind::invalid_argument, what);
}

void require(bool ok, const char* what) {
  if (!ok) require_failed(what);
}

// Out-strings cross the C boundary, so they live on the C heap and are
// released by osr_string_free.
char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

int checked_int(std::int64_t value, const char* what) {
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
    require_failed(std::string(what) + " is out of range");
  return static_cast<int>(value);
}

bool empty_config(const char* config_json) {
  return config_json == nullptr || config_json[0] == '\0';
}

osr::ExperimentConfig config_from(const char* config_json) {
  if (empty_config(config_json)) return osr::ExperimentConfig{};
  return osr::parse_experiment_config(config_json);
}

osr::EvalConfig eval_config_from(const char* eval_config_json) {
  if (empty_config(eval_config_json)) return osr::EvalConfig{};
  const std::string wrapped = std::string("{\"eval\":") + eval_config_json + "}";
  return osr::parse_experiment_config(wrapped).eval;
}

}  // namespace

extern "C" {

const char* osr_version(void) { return "0.1.0"; }

const char* osr_last_error(void) { return t_last_error.c_str(); }

void osr_string_free(char* s) { std::free(s); }

osr_status osr_dataset_gen_mixture(int num_classes, int64_t per_class, int dim, double spread,
                                   double radius, uint64_t seed, osr_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "osr_dataset_gen_mixture: out is null");
    osr::Dataset ds = osr::gen_gaussian_mixture(num_classes, checked_int(per_class, "per_class"),
                                                dim, spread, radius, seed);
    *out = new osr_dataset{std::move(ds)};
  });
}

osr_status osr_dataset_gen_ring(int64_t count, int dim, double inner_radius, double outer_radius,
                                uint64_t seed, osr_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "osr_dataset_gen_ring: out is null");
    osr::Dataset ds =
        osr::gen_ood_ring(checked_int(count, "count"), dim, inner_radius, outer_radius, seed);
    *out = new osr_dataset{std::move(ds)};
  });
}

osr_status osr_dataset_split(const osr_dataset* ds, double train_fraction, uint64_t seed,
                             osr_dataset** train_out, osr_dataset** test_out) {
  return guarded([&] {
    require(ds != nullptr, "osr_dataset_split: dataset is null");
    require(train_out != nullptr && test_out != nullptr, "osr_dataset_split: out is null");
    auto [train_set, test_set] = osr::split(ds->impl, osr::SplitSpec{train_fraction, seed});
    *train_out = new osr_dataset{std::move(train_set)};
    *test_out = new osr_dataset{std::move(test_set)};
  });
}

osr_status osr_dataset_load_csv(const char* path, osr_dataset** out) {
  return guarded([&] {
    require(path != nullptr, "osr_dataset_load_csv: path is null");
    require(out != nullptr, "osr_dataset_load_csv: out is null");
    *out = new osr_dataset{osr::load_csv(path)};
  });
}

osr_status osr_dataset_save_csv(const osr_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds != nullptr, "osr_dataset_save_csv: dataset is null");
    require(path != nullptr, "osr_dataset_save_csv: path is null");
    osr::save_csv(ds->impl, path);
  });
}

int64_t osr_dataset_rows(const osr_dataset* ds) { return ds == nullptr ? -1 : ds->impl.rows; }

int osr_dataset_dim(const osr_dataset* ds) { return ds == nullptr ? -1 : ds->impl.dim; }

int osr_dataset_num_classes(const osr_dataset* ds) {
  return ds == nullptr ? -1 : ds->impl.num_known_classes;
}

void osr_dataset_free(osr_dataset* ds) { delete ds; }

osr_status osr_train(const char* config_json, const osr_dataset* train_set, osr_model** model_out,
                     char** log_jsonl_out) {
  return guarded([&] {
    require(train_set != nullptr, "osr_train: train_set is null");
    require(model_out != nullptr, "osr_train: model_out is null");
    const osr::ExperimentConfig cfg = config_from(config_json);
    auto [params, log] = osr::train(cfg.train, train_set->impl);
    if (log_jsonl_out != nullptr) *log_jsonl_out = dup_string(osr::train_log_to_jsonl(log));
    *model_out = new osr_model{std::move(params)};
  });
}

osr_status osr_model_save(const osr_model* m, const char* path) {
  return guarded([&] {
    require(m != nullptr, "osr_model_save: model is null");
    require(path != nullptr, "osr_model_save: path is null");
    osr::save_checkpoint(m->impl, path);
  });
}

osr_status osr_model_load(const char* path, osr_model** out) {
  return guarded([&] {
    require(path != nullptr, "osr_model_load: path is null");
    require(out != nullptr, "osr_model_load: out is null");
    *out = new osr_model{osr::load_checkpoint(path)};
  });
}

osr_status osr_model_posterior(const osr_model* m, const double* x, int dim, double* known_out,
                               double* ood_out) {
  return guarded([&] {
    require(m != nullptr, "osr_model_posterior: model is null");
    require(x != nullptr, "osr_model_posterior: x is null");
    require(known_out != nullptr && ood_out != nullptr, "osr_model_posterior: out is null");
    if (dim != m->impl.dim_in)
      require_failed("osr_model_posterior: dim " + std::to_string(dim) + " does not match model "
                     "input dim " + std::to_string(m->impl.dim_in));
    for (int i = 0; i < dim; ++i)
      if (!std::isfinite(x[i]))
        require_failed("osr_model_posterior: x contains a non-finite value");
    const std::vector<double> logits = osr::active_logits(m->impl, x);
    const osr::PosteriorK1 post = osr::dste_combine(logits);
    for (int i = 0; i < m->impl.num_classes; ++i) known_out[i] = post.known[i];
    *ood_out = post.ood;
  });
}

int osr_model_num_classes(const osr_model* m) { return m == nullptr ? -1 : m->impl.num_classes; }

int osr_model_dim_in(const osr_model* m) { return m == nullptr ? -1 : m->impl.dim_in; }

void osr_model_free(osr_model* m) { delete m; }

osr_status osr_evaluate(const osr_model* m, const osr_dataset* ind_test,
                        const osr_dataset* ood_test, const char* eval_config_json,
                        char** metrics_json_out, char** scores_csv_out, char** roc_csv_out,
                        char** rc_csv_out) {
  return guarded([&] {
    require(m != nullptr, "osr_evaluate: model is null");
    require(ind_test != nullptr, "osr_evaluate: ind_test is null");
    require(ood_test != nullptr, "osr_evaluate: ood_test is null");
    const osr::EvalConfig eval = eval_config_from(eval_config_json);
    const osr::Evaluation ev =
        osr::evaluate(m->impl, ind_test->impl, ood_test->impl, eval.rules, eval.eps, eval.delta);
    if (metrics_json_out != nullptr)
      *metrics_json_out = dup_string(osr::metrics_to_json(ev.report));
    if (scores_csv_out != nullptr) *scores_csv_out = dup_string(osr::scores_to_csv(ev.rows));
    if (roc_csv_out != nullptr) *roc_csv_out = dup_string(osr::roc_csv_from_rows(ev.rows));
    if (rc_csv_out != nullptr) *rc_csv_out = dup_string(osr::rc_csv_from_rows(ev.rows));
  });
}

osr_status osr_curves_from_scores(const char* scores_csv, char** roc_csv_out, char** rc_csv_out) {
  return guarded([&] {
    require(scores_csv != nullptr, "osr_curves_from_scores: scores_csv is null");
    const std::vector<osr::ScoreRow> rows = osr::parse_scores_csv(scores_csv, "scores.csv");
    if (roc_csv_out != nullptr) *roc_csv_out = dup_string(osr::roc_csv_from_rows(rows));
    if (rc_csv_out != nullptr) *rc_csv_out = dup_string(osr::rc_csv_from_rows(rows));
  });
}

osr_status osr_run_gen_data(const char* config_json) {
  return guarded([&] { osr::run_gen_data(config_from(config_json)); });
}

osr_status osr_run_train(const char* config_json, char** summary_out) {
  return guarded([&] {
    const std::string summary = osr::run_train(config_from(config_json));
    if (summary_out != nullptr) *summary_out = dup_string(summary);
  });
}

osr_status osr_run_eval(const char* config_json) {
  return guarded([&] { osr::run_eval(config_from(config_json)); });
}

osr_status osr_run_curves(const char* config_json) {
  return guarded([&] { osr::run_curves(config_from(config_json)); });
}

}  // extern "C"
