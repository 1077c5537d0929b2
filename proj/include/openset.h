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

/*
 * C interface to the openset library: prototype classifiers whose one-vs-all
 * logits are fused into a (K+1)-way posterior for joint classification and
 * rejection.
 *
 * Every fallible call returns an osr_status; OSR_OK is zero. On failure a
 * thread-local message is available from osr_last_error() until the next
 * call on the same thread. Objects returned through out-parameters are owned
 * by the caller and released with the matching *_free function; out-strings
 * are released with osr_string_free. Out-parameters are left untouched on
 * failure.
 */

#ifndef OPENSET_OPENSET_H_
#define OPENSET_OPENSET_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum osr_status {
  OSR_OK = 0,
  OSR_ERR_INVALID_ARGUMENT = 1,
  OSR_ERR_CONFIG = 2,
  OSR_ERR_DATA = 3,
  OSR_ERR_IO = 4,
  OSR_ERR_NUMERIC = 5,
  OSR_ERR_INTERNAL = 6
} osr_status;

typedef struct osr_dataset osr_dataset;
typedef struct osr_model osr_model;

/* Library version as "major.minor.patch". */
const char* osr_version(void);

/* Message for the most recent failed call on this thread; "" if the most
 * recent call succeeded. The pointer stays valid until the next API call on
 * the same thread. */
const char* osr_last_error(void);

/* Release a string returned through a char** out-parameter. NULL is a no-op. */
void osr_string_free(char* s);

/* ---- datasets ------------------------------------------------------- */

/* K Gaussian blobs with means spaced on a circle of `radius` in the first two
 * coordinates and per-coordinate standard deviation `spread`. */
osr_status osr_dataset_gen_mixture(int num_classes, int64_t per_class, int dim, double spread,
                                   double radius, uint64_t seed, osr_dataset** out);

/* Ring of background samples (labels -1) with radius uniform in
 * [inner_radius, outer_radius]. */
osr_status osr_dataset_gen_ring(int64_t count, int dim, double inner_radius, double outer_radius,
                                uint64_t seed, osr_dataset** out);

/* Seeded shuffle followed by a prefix split of floor(train_fraction * rows). */
osr_status osr_dataset_split(const osr_dataset* ds, double train_fraction, uint64_t seed,
                             osr_dataset** train_out, osr_dataset** test_out);

osr_status osr_dataset_load_csv(const char* path, osr_dataset** out);
osr_status osr_dataset_save_csv(const osr_dataset* ds, const char* path);

/* Shape accessors; a NULL handle yields -1. */
int64_t osr_dataset_rows(const osr_dataset* ds);
int osr_dataset_dim(const osr_dataset* ds);
int osr_dataset_num_classes(const osr_dataset* ds);

void osr_dataset_free(osr_dataset* ds);

/* ---- models --------------------------------------------------------- */

/* Train on `train_set`. `config_json` is the experiment configuration
 * document (only its "model" and "train" sections matter here); NULL or ""
 * trains with the defaults. When log_jsonl_out is non-NULL it receives the
 * per-epoch training log, one JSON object per line. */
osr_status osr_train(const char* config_json, const osr_dataset* train_set, osr_model** model_out,
                     char** log_jsonl_out);

osr_status osr_model_save(const osr_model* m, const char* path);
osr_status osr_model_load(const char* path, osr_model** out);

/* Fused posterior for one sample: known_out must hold num_classes entries,
 * ood_out one. */
osr_status osr_model_posterior(const osr_model* m, const double* x, int dim, double* known_out,
                               double* ood_out);

/* Shape accessors; a NULL handle yields -1. */
int osr_model_num_classes(const osr_model* m);
int osr_model_dim_in(const osr_model* m);

void osr_model_free(osr_model* m);

/* ---- evaluation ----------------------------------------------------- */

/* Score ind_test (known labels) and ood_test (labels -1) under every
 * requested rule. `eval_config_json` is the "eval" section of the experiment
 * configuration, e.g. {"rules":["msp","unified"],"eps":0.05,"delta":0.5};
 * NULL or "" evaluates the default rule set. Each non-NULL out-string
 * receives the corresponding report (metrics JSON, per-sample scores CSV,
 * ROC points CSV, risk-coverage points CSV). */
osr_status osr_evaluate(const osr_model* m, const osr_dataset* ind_test,
                        const osr_dataset* ood_test, const char* eval_config_json,
                        char** metrics_json_out, char** scores_csv_out, char** roc_csv_out,
                        char** rc_csv_out);

/* Recompute the two curve files from a scores CSV document. */
osr_status osr_curves_from_scores(const char* scores_csv, char** roc_csv_out, char** rc_csv_out);

/* ---- pipeline drivers ------------------------------------------------ */

/* Run one experiment step from a single JSON configuration document (see the
 * project README for the schema). Files are read from and written to the
 * configured output_dir. */
osr_status osr_run_gen_data(const char* config_json);
osr_status osr_run_train(const char* config_json, char** summary_out);
osr_status osr_run_eval(const char* config_json);
osr_status osr_run_curves(const char* config_json);

#ifdef __cplusplus
}
#endif

#endif /* OPENSET_OPENSET_H_ */
