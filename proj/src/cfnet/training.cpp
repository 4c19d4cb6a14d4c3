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

#include "cfnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cfnet/error.hpp"

namespace cfnet {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpochStream = 2;

struct BatchResult {
  double loss_sum = 0.0;
};

// Forward + backward + one optimizer step over `batch`.
BatchResult StepBatch(ModelParams& params, const InteractionMatrix& train,
                      std::span<const TrainInstance> batch,
                      Optimizer& optimizer, ModelParams& grads,
                      double learning_rate, std::size_t batch_index) {
  std::vector<IndexList> rows;
  std::vector<IndexList> cols;
  rows.reserve(batch.size());
  cols.reserve(batch.size());
  for (const auto& inst : batch) {
    rows.push_back(train.row(inst.user));
    cols.push_back(train.col(inst.item));
  }
  const ForwardCache cache = Forward(params, std::move(rows), std::move(cols));

  BatchResult result;
  std::vector<double> dlogits(batch.size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double logit = cache.logits[static_cast<Eigen::Index>(b)];
    result.loss_sum += BceLossFromLogit(logit, batch[b].label);
    dlogits[b] = BceGradLogit(Sigmoid(logit), batch[b].label) * scale;
  }
  if (!std::isfinite(result.loss_sum)) {
    Fail(ErrorCode::kRuntime,
         "non-finite loss in batch " + std::to_string(batch_index) +
             " (first instance user " + std::to_string(batch[0].user) +
             ", item " + std::to_string(batch[0].item) + ")");
  }
  SetZero(grads);
  Backward(params, cache, dlogits, grads);
  optimizer.Step(params, grads, learning_rate);
  return result;
}

bool ParamsFinite(ModelParams& params) {
  for (const auto& t : Tensors(params)) {
    if (!AllFinite(t.data)) return false;
  }
  return true;
}

}  // namespace

double BceLossFromLogit(double logit, double label) {
  return -(label * LogSigmoid(logit) + (1.0 - label) * LogSigmoid(-logit));
}

std::string OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind ParseOptimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  Fail(ErrorCode::kInvalidArgument, "unknown optimizer '" + name + "'");
}

std::string ResampleModeName(ResampleMode mode) {
  return mode == ResampleMode::kPerEpoch ? "epoch" : "batch";
}

ResampleMode ParseResampleMode(const std::string& name) {
  if (name == "epoch") return ResampleMode::kPerEpoch;
  if (name == "batch") return ResampleMode::kPerBatch;
  Fail(ErrorCode::kInvalidArgument, "unknown resample mode '" + name + "'");
}

void ValidateTrainConfig(const TrainConfig& c) {
  Require(c.batch_size >= 1, ErrorCode::kInvalidArgument,
          "batch_size must be >= 1");
  Require(c.learning_rate >= 0.0 && std::isfinite(c.learning_rate),
          ErrorCode::kInvalidArgument, "learning rate must be >= 0");
  Require(c.epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be >= 0");
  Require(c.negative_ratio >= 0, ErrorCode::kInvalidArgument,
          "negative ratio must be >= 0");
  Require(c.eval_every >= 0 && c.patience >= 0, ErrorCode::kInvalidArgument,
          "eval_every and patience must be >= 0");
  Require(c.top_k >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");
  Require(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 &&
              c.adam.beta2 < 1.0 && c.adam.epsilon > 0.0,
          ErrorCode::kInvalidArgument, "invalid Adam hyper-parameters");
  Require(c.init_stddev > 0.0 && std::isfinite(c.init_stddev),
          ErrorCode::kInvalidArgument, "init stddev must be > 0");
}

Optimizer::Optimizer(OptimizerKind kind, ModelParams& params,
                     const AdamConfig& adam)
    : kind_(kind) {
  if (kind_ == OptimizerKind::kAdam) adam_ = MakeAdamState(ParamSpans(params), adam);
}

void Optimizer::Step(ModelParams& params, const ModelParams& grads,
                     double learning_rate) {
  if (kind_ == OptimizerKind::kAdam) {
    AdamStep(ParamSpans(params), GradSpans(grads), adam_, learning_rate);
  } else {
    SgdStep(ParamSpans(params), GradSpans(grads), learning_rate);
  }
}

EpochStats TrainEpoch(ModelParams& params, const InteractionMatrix& train,
                      const TrainConfig& config, Optimizer& optimizer,
                      Rng& rng) {
  ValidateTrainConfig(config);
  Require(params.arch.num_users == train.num_users() &&
              params.arch.num_items == train.num_items(),
          ErrorCode::kShape, "TrainEpoch: model does not match dataset size");
  ModelParams grads = ZerosLike(params);
  EpochStats stats;
  double loss_sum = 0.0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  if (config.resample == ResampleMode::kPerEpoch) {
    EpochBatchSet set = SampleTrainNegatives(train, config.negative_ratio, rng);
    std::shuffle(set.instances.begin(), set.instances.end(), rng);
    const std::span<const TrainInstance> all(set.instances);
    for (std::size_t start = 0; start < all.size(); start += batch_size) {
      const auto batch =
          all.subspan(start, std::min(batch_size, all.size() - start));
      loss_sum += StepBatch(params, train, batch, optimizer, grads,
                            config.learning_rate, stats.batches)
                      .loss_sum;
      stats.instances += batch.size();
      ++stats.batches;
    }
  } else {
    // Positives are shuffled once; each mini-batch draws its own negatives.
    std::vector<std::pair<Index, Index>> positives;
    positives.reserve(train.nnz());
    for (Index u = 0; u < train.num_users(); ++u) {
      for (Index i : train.row(u)) positives.emplace_back(u, i);
    }
    std::shuffle(positives.begin(), positives.end(), rng);
    const std::size_t per_batch = std::max<std::size_t>(
        1, batch_size / (1 + static_cast<std::size_t>(config.negative_ratio)));
    std::vector<TrainInstance> batch;
    for (std::size_t start = 0; start < positives.size(); start += per_batch) {
      batch.clear();
      const std::size_t end = std::min(positives.size(), start + per_batch);
      for (std::size_t k = start; k < end; ++k) {
        const auto [u, i] = positives[k];
        batch.push_back({u, i, 1.0});
        if (static_cast<Index>(train.row(u).size()) >= train.num_items()) {
          continue;
        }
        for (int r = 0; r < config.negative_ratio; ++r) {
          batch.push_back({u, SampleUnobserved(train, u, rng), 0.0});
        }
      }
      std::shuffle(batch.begin(), batch.end(), rng);
      loss_sum += StepBatch(params, train, batch, optimizer, grads,
                            config.learning_rate, stats.batches)
                      .loss_sum;
      stats.instances += batch.size();
      ++stats.batches;
    }
  }
  stats.mean_loss =
      stats.instances > 0 ? loss_sum / static_cast<double>(stats.instances)
                          : 0.0;
  return stats;
}

double MeanLoss(const ModelParams& params, const InteractionMatrix& train,
                std::span<const TrainInstance> instances) {
  if (instances.empty()) return 0.0;
  std::vector<IndexList> rows;
  std::vector<IndexList> cols;
  for (const auto& inst : instances) {
    rows.push_back(train.row(inst.user));
    cols.push_back(train.col(inst.item));
  }
  const ForwardCache cache = Forward(params, std::move(rows), std::move(cols));
  double sum = 0.0;
  for (std::size_t b = 0; b < instances.size(); ++b) {
    sum += BceLossFromLogit(cache.logits[static_cast<Eigen::Index>(b)],
                            instances[b].label);
  }
  return sum / static_cast<double>(instances.size());
}

TrainResult RunTraining(ModelParams params, const InteractionMatrix& train,
                        std::span<const TestCase> test_cases,
                        const TrainConfig& config) {
  ValidateTrainConfig(config);
  Optimizer optimizer(config.optimizer, params, config.adam);
  TrainResult result;
  TrainHistory& history = result.history;
  const bool evaluate = config.eval_every > 0 && !test_cases.empty();

  auto run_eval = [&]() {
    return Evaluate(ModelScorer(params, train), test_cases, config.top_k);
  };

  if (evaluate) {
    const EvalReport r = run_eval();
    history.initial_evaluated = true;
    history.initial_hit_ratio = r.hit_ratio;
    history.initial_ndcg = r.ndcg;
    history.best_hit_ratio = r.hit_ratio;
    history.best_ndcg = r.ndcg;
    result.best = params;
  }

  int stale_evals = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng = DerivedRng(config.seed, kEpochStream,
                         static_cast<std::uint64_t>(epoch));
    const EpochStats stats = TrainEpoch(params, train, config, optimizer, rng);
    if (!ParamsFinite(params)) {
      Fail(ErrorCode::kRuntime, "parameters became non-finite in epoch " +
                                    std::to_string(epoch));
    }
    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = stats.mean_loss;
    if (evaluate && epoch % config.eval_every == 0) {
      const EvalReport r = run_eval();
      record.evaluated = true;
      record.hit_ratio = r.hit_ratio;
      record.ndcg = r.ndcg;
      if (r.hit_ratio > history.best_hit_ratio) {
        history.best_epoch = epoch;
        history.best_hit_ratio = r.hit_ratio;
        history.best_ndcg = r.ndcg;
        result.best = params;
        stale_evals = 0;
      } else {
        ++stale_evals;
      }
    }
    record.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    history.epochs.push_back(record);
    if (config.patience > 0 && stale_evals >= config.patience) break;
  }

  if (!evaluate) {
    history.best_epoch = static_cast<int>(history.epochs.size());
    result.best = params;
  }
  result.last = std::move(params);
  return result;
}

TrainResult TrainFromScratch(const ArchSpec& arch,
                             const InteractionMatrix& train,
                             std::span<const TestCase> test_cases,
                             TrainConfig config) {
  Rng init_rng = DerivedRng(config.seed, kInitStream,
                            static_cast<std::uint64_t>(arch.variant));
  ModelParams params = InitModel(arch, init_rng, config.init_stddev);
  return RunTraining(std::move(params), train, test_cases, config);
}

TrainResult FineTuneFused(const ModelParams& rl, const ModelParams& ml,
                          const InteractionMatrix& train,
                          std::span<const TestCase> test_cases,
                          TrainConfig config, double alpha) {
  config.optimizer = OptimizerKind::kSgd;
  return RunTraining(FusePretrained(rl, ml, alpha), train, test_cases, config);
}

void WriteTrainLog(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  char buf[160];
  out << "epoch\tloss\thr\tndcg\n";
  if (history.initial_evaluated) {
    std::snprintf(buf, sizeof(buf), "0\t-\t%.6f\t%.6f\n",
                  history.initial_hit_ratio, history.initial_ndcg);
    out << buf;
  }
  for (const auto& e : history.epochs) {
    if (e.evaluated) {
      std::snprintf(buf, sizeof(buf), "%d\t%.10f\t%.6f\t%.6f\n", e.epoch,
                    e.mean_loss, e.hit_ratio, e.ndcg);
    } else {
      std::snprintf(buf, sizeof(buf), "%d\t%.10f\t-\t-\n", e.epoch,
                    e.mean_loss);
    }
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "# best_epoch\t%d\t%.6f\t%.6f\n",
                history.best_epoch, history.best_hit_ratio, history.best_ndcg);
  out << buf;
  Require(out.good(), ErrorCode::kIo, "write failed: " + path);
}

void WriteTimingLog(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  char buf[64];
  out << "epoch\tseconds\n";
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof(buf), "%d\t%.3f\n", e.epoch, e.seconds);
    out << buf;
  }
}

Rng DerivedRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace cfnet
