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

// Binary cross-entropy objective with sampled negatives, the mini-batch loop
// and the pre-train / fuse / fine-tune workflow.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfnet/data.hpp"
#include "cfnet/evaluation.hpp"
#include "cfnet/models.hpp"

namespace cfnet {

// -[y log p + (1 - y) log(1 - p)], evaluated from the logit.
double BceLossFromLogit(double logit, double label);
inline double BceLoss(const Prediction& prediction, double label) {
  return BceLossFromLogit(prediction.logit, label);
}

// d loss / d logit = p - y.
inline double BceGradLogit(double probability, double label) {
  return probability - label;
}

enum class OptimizerKind { kAdam, kSgd };
enum class ResampleMode { kPerEpoch, kPerBatch };

std::string OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(const std::string& name);
std::string ResampleModeName(ResampleMode mode);
ResampleMode ParseResampleMode(const std::string& name);

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 0.001;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  int epochs = 20;
  int negative_ratio = 4;
  std::uint64_t seed = 2019;
  int eval_every = 1;  // 0 disables evaluation during training
  int patience = 0;    // evaluations without improvement; 0 = never stop
  int top_k = 10;
  ResampleMode resample = ResampleMode::kPerEpoch;
  AdamConfig adam;
  double init_stddev = 0.01;  // TrainFromScratch only
};

void ValidateTrainConfig(const TrainConfig& config);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, ModelParams& params,
            const AdamConfig& adam = {});
  void Step(ModelParams& params, const ModelParams& grads,
            double learning_rate);
  OptimizerKind kind() const { return kind_; }
  const AdamState& adam_state() const { return adam_; }

 private:
  OptimizerKind kind_;
  AdamState adam_;
};

struct EpochStats {
  double mean_loss = 0.0;
  std::size_t instances = 0;
  std::size_t batches = 0;
};

// One pass: draw negatives, shuffle, then one optimizer step per
// mini-batch on the batch-mean gradient. Throws kRuntime on a non-finite
// loss, naming the batch.
EpochStats TrainEpoch(ModelParams& params, const InteractionMatrix& train,
                      const TrainConfig& config, Optimizer& optimizer,
                      Rng& rng);

// Mean BCE over an explicit instance list, without updating anything.
double MeanLoss(const ModelParams& params, const InteractionMatrix& train,
                std::span<const TrainInstance> instances);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  bool evaluated = false;
  double hit_ratio = 0.0;
  double ndcg = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  bool initial_evaluated = false;
  double initial_hit_ratio = 0.0;
  double initial_ndcg = 0.0;
  int best_epoch = 0;  // 0 = the initial parameters
  double best_hit_ratio = 0.0;
  double best_ndcg = 0.0;
};

struct TrainResult {
  ModelParams best;  // parameters at history.best_epoch
  ModelParams last;
  TrainHistory history;
};

// Runs config.epochs epochs from `params` with config.optimizer. When test
// cases are given, evaluates every config.eval_every epochs and keeps the
// parameters with the best HR@K.
TrainResult RunTraining(ModelParams params, const InteractionMatrix& train,
                        std::span<const TestCase> test_cases,
                        const TrainConfig& config);

// Adam from a Gaussian initialization of `arch`.
TrainResult TrainFromScratch(const ArchSpec& arch,
                             const InteractionMatrix& train,
                             std::span<const TestCase> test_cases,
                             TrainConfig config);

// Fuses pre-trained sub-models, then fine-tunes with plain SGD.
TrainResult FineTuneFused(const ModelParams& rl, const ModelParams& ml,
                          const InteractionMatrix& train,
                          std::span<const TestCase> test_cases,
                          TrainConfig config, double alpha = 0.5);

// Per-epoch log: "epoch\tloss\thr\tndcg"; epoch 0 carries the initial
// evaluation with loss "-". Unevaluated epochs print "-" for the metrics.
void WriteTrainLog(const std::string& path, const TrainHistory& history);
// Wall-clock sidecar: "epoch\tseconds".
void WriteTimingLog(const std::string& path, const TrainHistory& history);

// Stream derived from the master seed, e.g. one per epoch.
Rng DerivedRng(std::uint64_t seed, std::uint64_t stream,
               std::uint64_t index = 0);

}  // namespace cfnet
