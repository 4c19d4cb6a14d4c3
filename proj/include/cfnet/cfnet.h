/* Copyright 2026 The cfnet Authors.
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

/* C interface to the cfnet library. Every function returns a cfnet_status;
 * on failure cfnet_last_error() describes the most recent error on the
 * calling thread. Handles are opaque and owned by the caller. */

#ifndef CFNET_CFNET_H_
#define CFNET_CFNET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CFNET_BUILDING_LIBRARY)
#define CFNET_API __declspec(dllexport)
#else
#define CFNET_API __declspec(dllimport)
#endif
#else
#define CFNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cfnet_status {
  CFNET_OK = 0,
  CFNET_ERR_INVALID_ARGUMENT = 1, /* bad config, missing inputs */
  CFNET_ERR_IO = 2,
  CFNET_ERR_PARSE = 3,
  CFNET_ERR_SHAPE = 4,
  CFNET_ERR_RUNTIME = 5 /* e.g. divergence */
} cfnet_status;

typedef struct cfnet_config cfnet_config;
typedef struct cfnet_dataset cfnet_dataset;
typedef struct cfnet_model cfnet_model;

typedef struct cfnet_eval_summary {
  int k;
  double hit_ratio;
  double ndcg;
  int64_t users;
} cfnet_eval_summary;

CFNET_API const char* cfnet_version(void);
CFNET_API const char* cfnet_last_error(void);
CFNET_API const char* cfnet_status_name(cfnet_status status);

/* Configuration: command-line values (set) override file values
 * (load_file), which override built-in defaults. */
CFNET_API cfnet_status cfnet_config_create(cfnet_config** out);
CFNET_API void cfnet_config_destroy(cfnet_config* config);
CFNET_API cfnet_status cfnet_config_load_file(cfnet_config* config,
                                              const char* path);
CFNET_API cfnet_status cfnet_config_set(cfnet_config* config, const char* key,
                                        const char* value);
/* Copies the resolved value, NUL-terminated. *needed (optional) receives the
 * required buffer size including the terminator. */
CFNET_API cfnet_status cfnet_config_get(const cfnet_config* config,
                                        const char* key, char* buffer,
                                        size_t buffer_size, size_t* needed);

/* Commands. Summaries may be NULL. */
CFNET_API cfnet_status cfnet_prepare(const cfnet_config* config);
CFNET_API cfnet_status cfnet_train(const cfnet_config* config,
                                   cfnet_eval_summary* summary);
CFNET_API cfnet_status cfnet_evaluate(const cfnet_config* config,
                                      cfnet_eval_summary* summary);
CFNET_API cfnet_status cfnet_sweep(const cfnet_config* config,
                                   size_t* cells, size_t* failed_cells);

/* Prepared dataset, by prefix (<prefix>.train.rating etc). */
CFNET_API cfnet_status cfnet_dataset_open(const char* prefix,
                                          cfnet_dataset** out);
CFNET_API void cfnet_dataset_close(cfnet_dataset* dataset);
CFNET_API cfnet_status cfnet_dataset_dims(const cfnet_dataset* dataset,
                                          int32_t* users, int32_t* items,
                                          int64_t* train_interactions);

CFNET_API cfnet_status cfnet_model_load(const char* checkpoint,
                                        cfnet_model** out);
CFNET_API void cfnet_model_free(cfnet_model* model);
CFNET_API cfnet_status cfnet_model_predict(const cfnet_model* model,
                                           const cfnet_dataset* dataset,
                                           int32_t user, int32_t item,
                                           double* probability);
CFNET_API cfnet_status cfnet_model_evaluate(const cfnet_model* model,
                                            const cfnet_dataset* dataset,
                                            int k,
                                            cfnet_eval_summary* summary);
CFNET_API cfnet_status cfnet_itempop_evaluate(const cfnet_dataset* dataset,
                                              int k,
                                              cfnet_eval_summary* summary);

#ifdef __cplusplus
}
#endif

#endif /* CFNET_CFNET_H_ */
