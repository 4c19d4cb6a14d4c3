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

// The four end-to-end commands. Each reads a RunConfig, validates it up
// front (kInvalidArgument) and writes its artifacts plus a manifest into the
// "out" directory.

#pragma once

#include <string>
#include <vector>

#include "cfnet/config.hpp"
#include "cfnet/data.hpp"
#include "cfnet/evaluation.hpp"
#include "cfnet/training.hpp"

namespace cfnet {

const char* CodeVersion();

// "<out>/<tag>.manifest": command, code version, then every resolved key.
void WriteManifest(const std::string& path, const std::string& command,
                   const RunConfig& config);

struct PrepareResult {
  std::string prefix;  // <out>/<name>
  DatasetStats stats;
};

// raw -> k-core filter (optional) -> split -> test negatives -> files.
PrepareResult Prepare(const RunConfig& config);

struct TrainSummary {
  std::string variant;
  std::string checkpoint;
  TrainHistory history;
  EvalReport report;  // of the saved (best) parameters
};

// Variants: rl, ml, fused-scratch (Adam from scratch) and fused (SGD
// fine-tuning of rl-checkpoint + ml-checkpoint; both default to
// <out>/rl.ckpt and <out>/ml.ckpt).
TrainSummary Train(const RunConfig& config);

// Checkpoint or, with itempop = true, the popularity baseline.
EvalReport EvaluateCommand(const RunConfig& config);

struct SweepCell {
  std::string value;
  bool ok = false;
  double hit_ratio = 0.0;
  double ndcg = 0.0;
  std::string error;
};

// One training run per value of `axis` (neg-ratio or factors), all on the
// same prepared split. A failing cell is recorded, not fatal. For variant
// fused each cell pre-trains rl and ml first.
std::vector<SweepCell> Sweep(const RunConfig& config);

}  // namespace cfnet
