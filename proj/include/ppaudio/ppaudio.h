// Copyright 2026 The ppaudio Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * ppaudio C API.
 *
 * Every function returning ppa_status leaves a human-readable message in
 * ppa_last_error() (per thread) when it fails. Objects are opaque handles
 * released with their *_free function; strings returned through char** are
 * released with ppa_string_free. No function keeps a pointer to its inputs.
 */
#ifndef PPAUDIO_PPAUDIO_H
#define PPAUDIO_PPAUDIO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(PPAUDIO_BUILDING_LIBRARY)
#define PPA_API __attribute__((visibility("default")))
#else
#define PPA_API
#endif

typedef enum ppa_status {
  PPA_OK = 0,

  /* caller or configuration errors */
  PPA_ERR_INVALID_ARGUMENT = 10,
  PPA_ERR_INVALID_CONFIG = 11,
  PPA_ERR_FORBIDDEN_FEATURE = 12,
  PPA_ERR_UNKNOWN_FEATURE = 13,
  PPA_ERR_DEGENERATE_SPLIT = 14,

  /* data errors */
  PPA_ERR_IO = 20,
  PPA_ERR_MISSING_FILE = 21,
  PPA_ERR_DECODE = 22,
  PPA_ERR_SAMPLE_RATE_MISMATCH = 23,
  PPA_ERR_EMPTY_AFTER_TRIM = 24,
  PPA_ERR_MANIFEST = 25,
  PPA_ERR_SCHEMA_MISMATCH = 26,
  PPA_ERR_PARSE = 27,
  PPA_ERR_EMPTY_TABLE = 28,
  PPA_ERR_VERSION_MISMATCH = 29,
  PPA_ERR_CORRUPT_MODEL = 30,

  PPA_ERR_INTERNAL = 90
} ppa_status;

typedef enum ppa_partition {
  PPA_PARTITION_TRAIN = 0,
  PPA_PARTITION_VALIDATION = 1,
  PPA_PARTITION_TEST = 2
} ppa_partition;

typedef enum ppa_eval_level {
  PPA_EVAL_WINDOW = 0,
  PPA_EVAL_CLIP = 1
} ppa_eval_level;

typedef struct ppa_config ppa_config;
typedef struct ppa_table ppa_table;
typedef struct ppa_split ppa_split;
typedef struct ppa_model ppa_model;

PPA_API const char* ppa_version(void);
PPA_API const char* ppa_status_name(ppa_status status);
/* 0 success, 1 usage/config error, 2 data error, 3 internal error. */
PPA_API int ppa_status_exit_code(ppa_status status);
PPA_API const char* ppa_last_error(void);
PPA_API void ppa_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

/* json may be NULL or "" for defaults. Unknown keys are rejected. */
PPA_API ppa_status ppa_config_create(const char* json, ppa_config** out);
/* Fully resolved configuration including defaults. */
PPA_API ppa_status ppa_config_to_json(const ppa_config* config, char** out_json);
PPA_API void ppa_config_free(ppa_config* config);

/* Privacy gate: PPA_OK iff every name is an allowed feature family. */
PPA_API ppa_status ppa_validate_features(const char* const* names, size_t count);
/* JSON array of feature column names for the configured schema. */
PPA_API ppa_status ppa_feature_names(const ppa_config* config, char** out_json);

/* ---- feature tables --------------------------------------------------- */

/* Builds the window-level table from config.manifest_path / config.audio_dir.
 * out_stats_json (nullable) receives clip/row/skip counts. */
PPA_API ppa_status ppa_table_extract(const ppa_config* config, ppa_table** out, char** out_stats_json);
/* class_names_json: nullable object {"label": "name"}. */
PPA_API ppa_status ppa_table_load(const char* path, const ppa_config* config, const char* class_names_json,
                                  ppa_table** out);
PPA_API ppa_status ppa_table_save(const ppa_table* table, const char* path);
PPA_API size_t ppa_table_rows(const ppa_table* table);
PPA_API size_t ppa_table_dims(const ppa_table* table);
PPA_API ppa_status ppa_table_row(const ppa_table* table, size_t row, double* values, size_t capacity, int* label);
PPA_API ppa_status ppa_table_class_names(const ppa_table* table, char** out_json);
PPA_API void ppa_table_free(ppa_table* table);

/* ---- splits ------------------------------------------------------------ */

PPA_API ppa_status ppa_split_create(const ppa_table* table, const ppa_config* config, ppa_split** out);
PPA_API ppa_status ppa_split_from_json(const ppa_table* table, const char* json, ppa_split** out);
PPA_API ppa_status ppa_split_to_json(const ppa_split* split, char** out_json);
PPA_API size_t ppa_split_size(const ppa_split* split, ppa_partition partition);
PPA_API ppa_status ppa_split_select(const ppa_table* table, const ppa_split* split, ppa_partition partition,
                                    ppa_table** out);
PPA_API void ppa_split_free(ppa_split* split);

/* ---- models ------------------------------------------------------------ */

/* Model output does not depend on config.threads. */
PPA_API ppa_status ppa_model_train(const ppa_table* train, const ppa_config* config, ppa_model** out);
PPA_API ppa_status ppa_model_load(const char* path, ppa_model** out);
PPA_API ppa_status ppa_model_save(const ppa_model* model, const char* path);
PPA_API size_t ppa_model_classes(const ppa_model* model);
PPA_API size_t ppa_model_dims(const ppa_model* model);
/* Extraction settings the model was trained with, as a new config handle. */
PPA_API ppa_status ppa_model_config(const ppa_model* model, ppa_config** out);
/* JSON object mapping label to class name. */
PPA_API ppa_status ppa_model_class_names(const ppa_model* model, char** out_json);
/* votes (nullable) receives one count per class; capacity must cover them. */
PPA_API ppa_status ppa_model_predict(const ppa_model* model, const double* values, size_t count, int* label,
                                     uint32_t* votes, size_t votes_capacity);
PPA_API void ppa_model_free(ppa_model* model);

/* ---- evaluation -------------------------------------------------------- */

/* provenance (nullable) stamps split unit and seed into the report.
 * Any of the output strings may be NULL. */
PPA_API ppa_status ppa_evaluate(const ppa_model* model, const ppa_table* table, ppa_eval_level level,
                                const ppa_split* provenance, char** out_json, char** out_text,
                                char** out_confusion_csv);
PPA_API ppa_status ppa_importance(const ppa_model* model, char** out_json, char** out_text);

/* trim -> segment -> extract -> predict per window -> majority vote.
 * Result JSON: label, category, windows, window_labels, votes. */
PPA_API ppa_status ppa_classify_wav(const ppa_model* model, const char* path, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* PPAUDIO_PPAUDIO_H */
