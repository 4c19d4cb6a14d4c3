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

// The three network variants built on interaction-matrix inputs.
//
//   rl     user row  -> projection -> ReLU tower -> p
//          item col  -> projection -> ReLU tower -> q
//          logit = w_out . (p * q)
//   ml     p = P^T row, q = Q^T col, a0 = [p; q] -> ReLU MLP -> a
//          logit = w_out . a
//   fused  logit = w_out . [p * q ; a]
//
// The projection layers carry no bias and no activation. Output layers carry
// no bias. A user is always fed through its row of the training matrix and
// an item through its column.

#pragma once

#include <string>
#include <vector>

#include "cfnet/numkernel.hpp"

namespace cfnet {

enum class Variant { kRl, kMl, kFused };

std::string VariantName(Variant v);
Variant ParseVariant(const std::string& name);

struct ArchSpec {
  Variant variant = Variant::kFused;
  Index num_users = 0;  // M, length of an item column
  Index num_items = 0;  // N, length of a user row
  // rl: widths of the user/item pathways. The first entry is the width of
  // the sparse projection, the rest are ReLU layers.
  std::vector<int> user_tower;
  std::vector<int> item_tower;
  // ml: embedding width of P and Q, then the ReLU layer widths applied to
  // the concatenation [p; q].
  int embedding_dim = 0;
  std::vector<int> mlp_dims;
  int predictive_dim = 0;

  bool has_rl() const { return variant != Variant::kMl; }
  bool has_ml() const { return variant != Variant::kRl; }
  int output_dim() const {
    return variant == Variant::kFused ? 2 * predictive_dim : predictive_dim;
  }
};

// Towers [4d, 2d, d]; ml embedding 2d with MLP 4d -> 2d -> d.
ArchSpec DefaultArch(Variant variant, Index num_users, Index num_items,
                     int predictive_dim);

// Throws kShape/kInvalidArgument on any inconsistency.
void ValidateArch(const ArchSpec& arch);

struct RlParams {
  Matrix user_projection;  // N x user_tower[0]
  std::vector<DenseLayer> user_layers;
  Matrix item_projection;  // M x item_tower[0]
  std::vector<DenseLayer> item_layers;
};

struct MlParams {
  Matrix user_embedding;  // P, N x embedding_dim
  Matrix item_embedding;  // Q, M x embedding_dim
  std::vector<DenseLayer> layers;
};

struct ModelParams {
  ArchSpec arch;
  RlParams rl;  // empty unless arch.has_rl()
  MlParams ml;  // empty unless arch.has_ml()
  Vector output;  // arch.output_dim()
};

// All tensors shaped for `arch` and zero-filled.
ModelParams AllocateModel(const ArchSpec& arch);

// Every weight ~ normal(0, stddev); biases start at zero.
ModelParams InitModel(const ArchSpec& arch, Rng& rng, double stddev = 0.01);

ModelParams ZerosLike(const ModelParams& params);
void SetZero(ModelParams& params);

struct TensorView {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::span<double> data;
};

// Every parameter tensor in a fixed declaration order.
std::vector<TensorView> Tensors(ModelParams& params);
ParamList ParamSpans(ModelParams& params);
GradList GradSpans(const ModelParams& grads);

struct Prediction {
  double probability = 0.5;
  double logit = 0.0;
};

struct RlCache {
  Matrix user_a0;
  std::vector<DenseBatchCache> user_layers;
  Matrix p;
  Matrix item_a0;
  std::vector<DenseBatchCache> item_layers;
  Matrix q;
};

struct MlCache {
  Matrix p;
  Matrix q;
  std::vector<DenseBatchCache> layers;
  Matrix last;
};

// Intermediate state of a batched forward pass; one row per instance.
struct ForwardCache {
  Variant variant = Variant::kFused;
  std::vector<IndexList> user_rows;
  std::vector<IndexList> item_cols;
  RlCache rl;
  MlCache ml;
  Matrix predictive;  // batch x output_dim
  Vector logits;

  Eigen::Index batch_size() const { return logits.size(); }
};

// Batched forward over pairs (user_rows[b], item_cols[b]).
ForwardCache Forward(const ModelParams& params,
                     std::vector<IndexList> user_rows,
                     std::vector<IndexList> item_cols);

// Adds d(sum_b dlogits[b] * logit_b)/d(theta) into `grads`. Projection and
// embedding gradients touch only the active rows.
void Backward(const ModelParams& params, const ForwardCache& cache,
              std::span<const double> dlogits, ModelParams& grads);

// Single-pair entry points. Each checks that `params` is of the named
// variant.
std::pair<Prediction, ForwardCache> RlForward(const ModelParams& params,
                                              IndexList user_row,
                                              IndexList item_col);
std::pair<Prediction, ForwardCache> MlForward(const ModelParams& params,
                                              IndexList user_row,
                                              IndexList item_col);
std::pair<Prediction, ForwardCache> FusedForward(const ModelParams& params,
                                                 IndexList user_row,
                                                 IndexList item_col);
// Dispatches on params.arch.variant.
Prediction Predict(const ModelParams& params, IndexList user_row,
                   IndexList item_col);

ModelParams ModelBackward(const ModelParams& params, const ForwardCache& cache,
                          double dloss_dlogit);

// Builds a fused model whose sub-networks are copies of the pre-trained ones
// and whose output weight is [alpha * w_rl ; (1 - alpha) * w_ml].
ModelParams FusePretrained(const ModelParams& rl, const ModelParams& ml,
                           double alpha = 0.5);

// Checkpoint layout (all text lines end in '\n'):
//   CFNETCKPT
//   version 1
//   variant <rl|ml|fused>
//   num_users <M>
//   num_items <N>
//   user_tower <w,w,...>      (empty list written as "-")
//   item_tower <...>
//   embedding_dim <e>
//   mlp_dims <...>
//   predictive_dim <d>
//   tensors <count>
// then per tensor: "tensor <name> <rows> <cols>\n" followed by rows*cols
// little-endian IEEE-754 doubles, row-major.
inline constexpr int kCheckpointVersion = 1;

void SaveCheckpoint(const ModelParams& params, const std::string& path);
ModelParams LoadCheckpoint(const std::string& path);

}  // namespace cfnet
