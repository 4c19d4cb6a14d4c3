// Copyright 2026 The cfnet Authors.
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

#include "cfnet/cfnet.h"

#include <cstring>
#include <new>
#include <string>

#include "cfnet/config.hpp"
#include "cfnet/data.hpp"
#include "cfnet/error.hpp"
#include "cfnet/evaluation.hpp"
#include "cfnet/models.hpp"
#include "cfnet/pipeline.hpp"

struct cfnet_config {
  cfnet::RunConfig config;
};

struct cfnet_dataset {
  cfnet::CanonicalDataset data;
};

struct cfnet_model {
  cfnet::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

cfnet_status Record(cfnet_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
cfnet_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CFNET_OK;
  } catch (const cfnet::Error& e) {
    return Record(static_cast<cfnet_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Record(CFNET_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return Record(CFNET_ERR_RUNTIME, e.what());
  } catch (...) {
    return Record(CFNET_ERR_RUNTIME, "unknown error");
  }
}

cfnet_status NullArg(const char* what) {
  return Record(CFNET_ERR_INVALID_ARGUMENT,
                std::string(what) + " must not be NULL");
}

void Fill(cfnet_eval_summary* out, const cfnet::EvalReport& r) {
  if (out == nullptr) return;
  out->k = r.k;
  out->hit_ratio = r.hit_ratio;
  out->ndcg = r.ndcg;
  out->users = static_cast<int64_t>(r.per_user.size());
}

}  // namespace

extern "C" {

const char* cfnet_version(void) { return cfnet::CodeVersion(); }

const char* cfnet_last_error(void) { return g_last_error.c_str(); }

const char* cfnet_status_name(cfnet_status status) {
  switch (status) {
    case CFNET_OK: return "ok";
    case CFNET_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CFNET_ERR_IO: return "i/o error";
    case CFNET_ERR_PARSE: return "parse error";
    case CFNET_ERR_SHAPE: return "shape mismatch";
    case CFNET_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

cfnet_status cfnet_config_create(cfnet_config** out) {
  if (out == nullptr) return NullArg("out");
  return Guard([&] { *out = new cfnet_config(); });
}

void cfnet_config_destroy(cfnet_config* config) { delete config; }

cfnet_status cfnet_config_load_file(cfnet_config* config, const char* path) {
  if (config == nullptr) return NullArg("config");
  if (path == nullptr) return NullArg("path");
  return Guard([&] { config->config.LoadFile(path); });
}

cfnet_status cfnet_config_set(cfnet_config* config, const char* key,
                              const char* value) {
  if (config == nullptr) return NullArg("config");
  if (key == nullptr || value == nullptr) return NullArg("key/value");
  return Guard([&] { config->config.SetOverride(key, value); });
}

cfnet_status cfnet_config_get(const cfnet_config* config, const char* key,
                              char* buffer, size_t buffer_size,
                              size_t* needed) {
  if (config == nullptr) return NullArg("config");
  if (key == nullptr) return NullArg("key");
  return Guard([&] {
    const std::string value = config->config.Get(key);
    if (needed != nullptr) *needed = value.size() + 1;
    if (buffer == nullptr) return;
    cfnet::Require(buffer_size > value.size(),
                   cfnet::ErrorCode::kInvalidArgument,
                   "buffer too small for value of '" + std::string(key) + "'");
    std::memcpy(buffer, value.c_str(), value.size() + 1);
  });
}

cfnet_status cfnet_prepare(const cfnet_config* config) {
  if (config == nullptr) return NullArg("config");
  return Guard([&] { cfnet::Prepare(config->config); });
}

cfnet_status cfnet_train(const cfnet_config* config,
                         cfnet_eval_summary* summary) {
  if (config == nullptr) return NullArg("config");
  return Guard([&] { Fill(summary, cfnet::Train(config->config).report); });
}

cfnet_status cfnet_evaluate(const cfnet_config* config,
                            cfnet_eval_summary* summary) {
  if (config == nullptr) return NullArg("config");
  return Guard([&] { Fill(summary, cfnet::EvaluateCommand(config->config)); });
}

cfnet_status cfnet_sweep(const cfnet_config* config, size_t* cells,
                         size_t* failed_cells) {
  if (config == nullptr) return NullArg("config");
  return Guard([&] {
    const auto result = cfnet::Sweep(config->config);
    size_t failed = 0;
    for (const auto& c : result) failed += c.ok ? 0 : 1;
    if (cells != nullptr) *cells = result.size();
    if (failed_cells != nullptr) *failed_cells = failed;
  });
}

cfnet_status cfnet_dataset_open(const char* prefix, cfnet_dataset** out) {
  if (prefix == nullptr) return NullArg("prefix");
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    *out = new cfnet_dataset{cfnet::ReadCanonical(prefix)};
  });
}

void cfnet_dataset_close(cfnet_dataset* dataset) { delete dataset; }

cfnet_status cfnet_dataset_dims(const cfnet_dataset* dataset, int32_t* users,
                                int32_t* items, int64_t* train_interactions) {
  if (dataset == nullptr) return NullArg("dataset");
  const auto& train = dataset->data.split.train;
  if (users != nullptr) *users = train.num_users();
  if (items != nullptr) *items = train.num_items();
  if (train_interactions != nullptr) {
    *train_interactions = static_cast<int64_t>(train.nnz());
  }
  g_last_error.clear();
  return CFNET_OK;
}

cfnet_status cfnet_model_load(const char* checkpoint, cfnet_model** out) {
  if (checkpoint == nullptr) return NullArg("checkpoint");
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    *out = new cfnet_model{cfnet::LoadCheckpoint(checkpoint)};
  });
}

void cfnet_model_free(cfnet_model* model) { delete model; }

cfnet_status cfnet_model_predict(const cfnet_model* model,
                                 const cfnet_dataset* dataset, int32_t user,
                                 int32_t item, double* probability) {
  if (model == nullptr) return NullArg("model");
  if (dataset == nullptr) return NullArg("dataset");
  if (probability == nullptr) return NullArg("probability");
  return Guard([&] {
    const auto& train = dataset->data.split.train;
    const auto& arch = model->params.arch;
    cfnet::Require(arch.num_users == train.num_users() &&
                       arch.num_items == train.num_items(),
                   cfnet::ErrorCode::kShape,
                   "model and dataset sizes differ");
    cfnet::Require(user >= 0 && user < train.num_users() && item >= 0 &&
                       item < train.num_items(),
                   cfnet::ErrorCode::kInvalidArgument,
                   "user or item index out of range");
    *probability =
        cfnet::Predict(model->params, train.row(user), train.col(item))
            .probability;
  });
}

cfnet_status cfnet_model_evaluate(const cfnet_model* model,
                                  const cfnet_dataset* dataset, int k,
                                  cfnet_eval_summary* summary) {
  if (model == nullptr) return NullArg("model");
  if (dataset == nullptr) return NullArg("dataset");
  return Guard([&] {
    const cfnet::ModelScorer scorer(model->params, dataset->data.split.train);
    Fill(summary, cfnet::Evaluate(scorer, dataset->data.test_cases, k));
  });
}

cfnet_status cfnet_itempop_evaluate(const cfnet_dataset* dataset, int k,
                                    cfnet_eval_summary* summary) {
  if (dataset == nullptr) return NullArg("dataset");
  return Guard([&] {
    const cfnet::ItemPopScorer scorer(dataset->data.split.train);
    Fill(summary, cfnet::Evaluate(scorer, dataset->data.test_cases, k));
  });
}

}  // extern "C"
