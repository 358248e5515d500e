/*
 * Copyright 2026 The fergrad Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the fergrad core. All functions return an fg_status; on
 * failure fg_last_error() describes the most recent error on the calling
 * thread. Handles are opaque and owned by the caller until destroyed. */
#ifndef FERGRAD_H_
#define FERGRAD_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FG_API __declspec(dllexport)
#else
#define FG_API __attribute__((visibility("default")))
#endif

typedef enum fg_status {
  FG_OK = 0,
  FG_INVALID_ARGUMENT = 1,
  FG_SHAPE_MISMATCH = 2,
  FG_IO = 3,
  FG_FORMAT = 4,
  FG_INTEGRITY = 5,
  FG_NUMERIC = 6,
  FG_STATE = 7,
  FG_INTERNAL = 99
} fg_status;

typedef struct fg_model fg_model;
typedef struct fg_dataset fg_dataset;
typedef struct fg_report fg_report;
typedef struct fg_string fg_string;

typedef struct fg_train_config {
  const char* arch;     /* "base" or "vgg13" */
  const char* variant;  /* plain, laplacian-concat, sobel-concat, laplacian-parallel,
                           sobel-parallel, triple-stream */
  int stl;
  int shared_backbone;
  double lr;
  double beta1, beta2, eps;
  double bn_momentum;   /* batch-norm running-statistics decay, in (0, 1) */
  int64_t batch;
  int64_t epochs;
  uint64_t seed;
  const char* dataset;    /* ferplus, kdef, synthetic */
  const char* data_dir;   /* may be NULL for synthetic */
  const char* checkpoint; /* model stem, NULL or "" to skip saving */
} fg_train_config;

FG_API const char* fg_last_error(void);
FG_API const char* fg_status_name(fg_status status);
FG_API void fg_train_config_defaults(fg_train_config* cfg);

/* Owned strings returned by reporting calls. */
FG_API const char* fg_string_data(const fg_string* s);
FG_API void fg_string_destroy(fg_string* s);

/* Architecture ledger as a printable table; *total receives the ledger total. */
FG_API fg_status fg_count_params(const char* arch, const char* variant, int stl, int classes,
                                 fg_string** table, int64_t* total);
/* Compares the base ledger with the reference rows; *mismatches receives the
 * number of differing values out of 17 (16 rows and the total). */
FG_API fg_status fg_audit_base(fg_string** report, int* mismatches);
/* Finite-difference suite; *failures counts ops above tolerance. */
FG_API fg_status fg_gradcheck(int seeds, double tolerance, fg_string** report, int* failures);

/* Datasets: FERplus needs fer2013.csv and fer2013new.csv under data_dir;
 * KDEF reads image files below data_dir; synthetic generates oriented bars. */
FG_API fg_status fg_dataset_load(const char* kind, const char* data_dir, uint64_t seed,
                                 fg_dataset** out);
/* Generated 8-class set: family "bars" (oriented gratings) or "ramps"
 * (directional ramps with matched mean). */
FG_API fg_status fg_dataset_synthetic(const char* family, int64_t train_per_class,
                                      int64_t val_per_class, int64_t test_per_class,
                                      uint64_t seed, fg_dataset** out);
FG_API fg_status fg_dataset_summary(const fg_dataset* ds, fg_string** summary);
FG_API fg_status fg_dataset_preprocess(const fg_dataset* ds, const char* variant,
                                       const char* out_dir);
FG_API void fg_dataset_destroy(fg_dataset* ds);

FG_API fg_status fg_model_build(const char* arch, const char* variant, int stl, int classes,
                                uint64_t seed, fg_model** out);
FG_API fg_status fg_model_load(const char* stem, fg_model** out);
FG_API fg_status fg_model_save(fg_model* model, const char* stem);
FG_API fg_status fg_model_param_count(fg_model* model, int64_t* ledgered, int64_t* auxiliary);
/* input holds n samples of H*W*C floats per stream, streams back to back. */
FG_API fg_status fg_model_forward(fg_model* model, const float* input, int64_t n,
                                  float* logits, int64_t logits_len);
FG_API void fg_model_destroy(fg_model* model);

/* Trains with cfg on ds; writes per-epoch history lines and returns the model. */
FG_API fg_status fg_train(const fg_train_config* cfg, const fg_dataset* ds, fg_model** out,
                          fg_string** history);
/* Test-split (or validation, when no test split) accuracy of a model. */
FG_API fg_status fg_evaluate(fg_model* model, const fg_dataset* ds, double* accuracy,
                             fg_string** confusion);

FG_API fg_status fg_multi_run(const fg_train_config* cfg, const fg_dataset* ds, int64_t runs,
                              fg_report** out);
FG_API fg_status fg_report_table(const fg_report* rep, fg_string** table);
FG_API fg_status fg_report_write(const fg_report* rep, const char* path);
FG_API void fg_report_destroy(fg_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* FERGRAD_H_ */
