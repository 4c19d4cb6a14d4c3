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

#include "cfnet/models.hpp"

#include <string>

#include "cfnet/error.hpp"

namespace cfnet {

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kRl:
      return "rl";
    case Variant::kMl:
      return "ml";
    case Variant::kFused:
      return "fused";
  }
  return "?";
}

Variant ParseVariant(const std::string& name) {
  if (name == "rl") return Variant::kRl;
  if (name == "ml") return Variant::kMl;
  if (name == "fused") return Variant::kFused;
  Fail(ErrorCode::kInvalidArgument, "unknown model variant '" + name + "'");
}

ArchSpec DefaultArch(Variant variant, Index num_users, Index num_items,
                     int predictive_dim) {
  Require(predictive_dim >= 1, ErrorCode::kInvalidArgument,
          "predictive dimension must be >= 1");
  const int d = predictive_dim;
  ArchSpec arch;
  arch.variant = variant;
  arch.num_users = num_users;
  arch.num_items = num_items;
  arch.predictive_dim = d;
  if (arch.has_rl()) {
    arch.user_tower = {4 * d, 2 * d, d};
    arch.item_tower = {4 * d, 2 * d, d};
  }
  if (arch.has_ml()) {
    arch.embedding_dim = 2 * d;
    arch.mlp_dims = {2 * d, d};
  }
  return arch;
}

void ValidateArch(const ArchSpec& arch) {
  Require(arch.num_users >= 1 && arch.num_items >= 1,
          ErrorCode::kInvalidArgument, "arch: user/item counts must be >= 1");
  Require(arch.predictive_dim >= 1, ErrorCode::kInvalidArgument,
          "arch: predictive_dim must be >= 1");
  auto positive = [](const std::vector<int>& dims) {
    for (int w : dims) {
      if (w < 1) return false;
    }
    return true;
  };
  if (arch.has_rl()) {
    Require(!arch.user_tower.empty() && !arch.item_tower.empty() &&
                positive(arch.user_tower) && positive(arch.item_tower),
            ErrorCode::kInvalidArgument, "arch: rl towers need widths >= 1");
    Require(arch.user_tower.back() == arch.predictive_dim &&
                arch.item_tower.back() == arch.predictive_dim,
            ErrorCode::kShape,
            "arch: rl towers must both end at predictive_dim " +
                std::to_string(arch.predictive_dim));
  }
  if (arch.has_ml()) {
    Require(arch.embedding_dim >= 1 && positive(arch.mlp_dims),
            ErrorCode::kInvalidArgument, "arch: ml widths must be >= 1");
    const int last =
        arch.mlp_dims.empty() ? 2 * arch.embedding_dim : arch.mlp_dims.back();
    Require(last == arch.predictive_dim, ErrorCode::kShape,
            "arch: ml MLP must end at predictive_dim " +
                std::to_string(arch.predictive_dim));
  }
}

namespace {

std::vector<DenseLayer> MakeTower(int in_dim, const std::vector<int>& widths) {
  std::vector<DenseLayer> layers;
  for (int w : widths) {
    layers.push_back({Matrix::Zero(in_dim, w), Vector::Zero(w),
                      Activation::kReLU});
    in_dim = w;
  }
  return layers;
}

std::vector<int> Tail(const std::vector<int>& v) {
  return {v.begin() + 1, v.end()};
}

void CheckVariant(const ModelParams& params, Variant expected) {
  Require(params.arch.variant == expected, ErrorCode::kInvalidArgument,
          "expected a " + VariantName(expected) + " model, got " +
              VariantName(params.arch.variant));
}

Matrix RunTower(const std::vector<DenseLayer>& layers, Matrix a,
                std::vector<DenseBatchCache>& caches) {
  caches.resize(layers.size());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    a = DenseForwardBatch(layers[k], a, &caches[k]);
  }
  return a;
}

// Back-propagates `grad` (w.r.t. the tower output) to the tower input.
Matrix BackTower(const std::vector<DenseLayer>& layers,
                 const std::vector<DenseBatchCache>& caches, Matrix grad,
                 std::vector<DenseLayer>& grad_layers) {
  for (std::size_t k = layers.size(); k-- > 0;) {
    grad = DenseBackwardBatch(layers[k], caches[k], std::move(grad),
                              grad_layers[k].weight, grad_layers[k].bias);
  }
  return grad;
}

void AddTensor(std::vector<TensorView>& out, std::string name, Matrix& m) {
  out.push_back({std::move(name), m.rows(), m.cols(), AsSpan(m)});
}

void AddTensor(std::vector<TensorView>& out, std::string name, Vector& v) {
  out.push_back({std::move(name), v.size(), 1, AsSpan(v)});
}

void AddLayers(std::vector<TensorView>& out, const std::string& prefix,
               std::vector<DenseLayer>& layers) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string base = prefix + "." + std::to_string(k);
    AddTensor(out, base + ".weight", layers[k].weight);
    AddTensor(out, base + ".bias", layers[k].bias);
  }
}

void ZeroLayers(std::vector<DenseLayer>& layers) {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

}  // namespace

ModelParams AllocateModel(const ArchSpec& arch) {
  ValidateArch(arch);
  ModelParams params;
  params.arch = arch;
  if (arch.has_rl()) {
    params.rl.user_projection = Matrix::Zero(arch.num_items, arch.user_tower[0]);
    params.rl.user_layers = MakeTower(arch.user_tower[0], Tail(arch.user_tower));
    params.rl.item_projection = Matrix::Zero(arch.num_users, arch.item_tower[0]);
    params.rl.item_layers = MakeTower(arch.item_tower[0], Tail(arch.item_tower));
  }
  if (arch.has_ml()) {
    params.ml.user_embedding = Matrix::Zero(arch.num_items, arch.embedding_dim);
    params.ml.item_embedding = Matrix::Zero(arch.num_users, arch.embedding_dim);
    params.ml.layers = MakeTower(2 * arch.embedding_dim, arch.mlp_dims);
  }
  params.output = Vector::Zero(arch.output_dim());
  return params;
}

ModelParams InitModel(const ArchSpec& arch, Rng& rng, double stddev) {
  Require(stddev > 0.0, ErrorCode::kInvalidArgument,
          "InitModel: stddev must be positive");
  ModelParams params = AllocateModel(arch);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& t : Tensors(params)) {
    if (t.name.ends_with(".bias")) continue;
    for (double& v : t.data) v = dist(rng);
  }
  return params;
}

ModelParams ZerosLike(const ModelParams& params) {
  ModelParams zeros = params;
  SetZero(zeros);
  return zeros;
}

void SetZero(ModelParams& params) {
  params.rl.user_projection.setZero();
  params.rl.item_projection.setZero();
  ZeroLayers(params.rl.user_layers);
  ZeroLayers(params.rl.item_layers);
  params.ml.user_embedding.setZero();
  params.ml.item_embedding.setZero();
  ZeroLayers(params.ml.layers);
  params.output.setZero();
}

std::vector<TensorView> Tensors(ModelParams& params) {
  std::vector<TensorView> out;
  if (params.arch.has_rl()) {
    AddTensor(out, "rl.user_projection", params.rl.user_projection);
    AddLayers(out, "rl.user_layer", params.rl.user_layers);
    AddTensor(out, "rl.item_projection", params.rl.item_projection);
    AddLayers(out, "rl.item_layer", params.rl.item_layers);
  }
  if (params.arch.has_ml()) {
    AddTensor(out, "ml.user_embedding", params.ml.user_embedding);
    AddTensor(out, "ml.item_embedding", params.ml.item_embedding);
    AddLayers(out, "ml.layer", params.ml.layers);
  }
  AddTensor(out, "output", params.output);
  return out;
}

ParamList ParamSpans(ModelParams& params) {
  ParamList spans;
  for (auto& t : Tensors(params)) spans.push_back(t.data);
  return spans;
}

GradList GradSpans(const ModelParams& grads) {
  GradList spans;
  for (auto& t : Tensors(const_cast<ModelParams&>(grads))) {
    spans.emplace_back(t.data.data(), t.data.size());
  }
  return spans;
}

ForwardCache Forward(const ModelParams& params,
                     std::vector<IndexList> user_rows,
                     std::vector<IndexList> item_cols) {
  const ArchSpec& arch = params.arch;
  Require(user_rows.size() == item_cols.size(), ErrorCode::kShape,
          "Forward: user/item batch sizes differ");
  for (const auto& r : user_rows) CheckActiveIndices(r, arch.num_items);
  for (const auto& c : item_cols) CheckActiveIndices(c, arch.num_users);

  ForwardCache cache;
  cache.variant = arch.variant;
  cache.user_rows = std::move(user_rows);
  cache.item_cols = std::move(item_cols);
  const auto batch = static_cast<Eigen::Index>(cache.user_rows.size());
  cache.predictive.resize(batch, arch.output_dim());

  Eigen::Index offset = 0;
  if (arch.has_rl()) {
    RlCache& rl = cache.rl;
    SparseProjectForwardBatch(params.rl.user_projection, cache.user_rows,
                              rl.user_a0);
    rl.p = RunTower(params.rl.user_layers, rl.user_a0, rl.user_layers);
    SparseProjectForwardBatch(params.rl.item_projection, cache.item_cols,
                              rl.item_a0);
    rl.q = RunTower(params.rl.item_layers, rl.item_a0, rl.item_layers);
    cache.predictive.leftCols(arch.predictive_dim) = rl.p.cwiseProduct(rl.q);
    offset = arch.predictive_dim;
  }
  if (arch.has_ml()) {
    MlCache& ml = cache.ml;
    SparseProjectForwardBatch(params.ml.user_embedding, cache.user_rows, ml.p);
    SparseProjectForwardBatch(params.ml.item_embedding, cache.item_cols, ml.q);
    Matrix a0(batch, 2 * arch.embedding_dim);
    a0.leftCols(arch.embedding_dim) = ml.p;
    a0.rightCols(arch.embedding_dim) = ml.q;
    ml.last = RunTower(params.ml.layers, std::move(a0), ml.layers);
    cache.predictive.middleCols(offset, arch.predictive_dim) = ml.last;
  }
  cache.logits = cache.predictive * params.output;
  return cache;
}

void Backward(const ModelParams& params, const ForwardCache& cache,
              std::span<const double> dlogits, ModelParams& grads) {
  const ArchSpec& arch = params.arch;
  Require(cache.variant == arch.variant &&
              static_cast<Eigen::Index>(dlogits.size()) == cache.batch_size() &&
              cache.predictive.cols() == arch.output_dim(),
          ErrorCode::kShape, "Backward: cache does not match model");
  const Eigen::Map<const Vector> g(dlogits.data(),
                                   static_cast<Eigen::Index>(dlogits.size()));
  grads.output.noalias() += cache.predictive.transpose() * g;
  // d logit / d predictive, one row per instance.
  const Matrix grad_pred = g * params.output.transpose();

  Eigen::Index offset = 0;
  if (arch.has_rl()) {
    const RlCache& rl = cache.rl;
    const auto grad_prod = grad_pred.leftCols(arch.predictive_dim);
    Matrix grad_p = grad_prod.cwiseProduct(rl.q);
    Matrix grad_q = grad_prod.cwiseProduct(rl.p);
    Matrix grad_ua0 = BackTower(params.rl.user_layers, rl.user_layers,
                                std::move(grad_p), grads.rl.user_layers);
    SparseProjectBackwardAccumulate(grad_ua0, cache.user_rows,
                                    grads.rl.user_projection);
    Matrix grad_ia0 = BackTower(params.rl.item_layers, rl.item_layers,
                                std::move(grad_q), grads.rl.item_layers);
    SparseProjectBackwardAccumulate(grad_ia0, cache.item_cols,
                                    grads.rl.item_projection);
    offset = arch.predictive_dim;
  }
  if (arch.has_ml()) {
    const MlCache& ml = cache.ml;
    Matrix grad_a0 =
        BackTower(params.ml.layers, ml.layers,
                  grad_pred.middleCols(offset, arch.predictive_dim),
                  grads.ml.layers);
    SparseProjectBackwardAccumulate(grad_a0.leftCols(arch.embedding_dim),
                                    cache.user_rows, grads.ml.user_embedding);
    SparseProjectBackwardAccumulate(grad_a0.rightCols(arch.embedding_dim),
                                    cache.item_cols, grads.ml.item_embedding);
  }
}

namespace {

std::pair<Prediction, ForwardCache> ForwardOne(const ModelParams& params,
                                               IndexList user_row,
                                               IndexList item_col) {
  ForwardCache cache = Forward(params, {user_row}, {item_col});
  Prediction pred;
  pred.logit = cache.logits[0];
  pred.probability = Sigmoid(pred.logit);
  return {pred, std::move(cache)};
}

}  // namespace

std::pair<Prediction, ForwardCache> RlForward(const ModelParams& params,
                                              IndexList user_row,
                                              IndexList item_col) {
  CheckVariant(params, Variant::kRl);
  return ForwardOne(params, user_row, item_col);
}

std::pair<Prediction, ForwardCache> MlForward(const ModelParams& params,
                                              IndexList user_row,
                                              IndexList item_col) {
  CheckVariant(params, Variant::kMl);
  return ForwardOne(params, user_row, item_col);
}

std::pair<Prediction, ForwardCache> FusedForward(const ModelParams& params,
                                                 IndexList user_row,
                                                 IndexList item_col) {
  CheckVariant(params, Variant::kFused);
  return ForwardOne(params, user_row, item_col);
}

Prediction Predict(const ModelParams& params, IndexList user_row,
                   IndexList item_col) {
  return ForwardOne(params, user_row, item_col).first;
}

ModelParams ModelBackward(const ModelParams& params, const ForwardCache& cache,
                          double dloss_dlogit) {
  Require(cache.batch_size() == 1, ErrorCode::kShape,
          "ModelBackward: expects a single-pair cache");
  ModelParams grads = ZerosLike(params);
  const double g[1] = {dloss_dlogit};
  Backward(params, cache, g, grads);
  return grads;
}

ModelParams FusePretrained(const ModelParams& rl, const ModelParams& ml,
                           double alpha) {
  CheckVariant(rl, Variant::kRl);
  CheckVariant(ml, Variant::kMl);
  Require(rl.arch.num_users == ml.arch.num_users &&
              rl.arch.num_items == ml.arch.num_items,
          ErrorCode::kShape,
          "FusePretrained: sub-models were built for different datasets");
  Require(rl.arch.predictive_dim == ml.arch.predictive_dim, ErrorCode::kShape,
          "FusePretrained: predictive dimensions differ (" +
              std::to_string(rl.arch.predictive_dim) + " vs " +
              std::to_string(ml.arch.predictive_dim) + ")");
  Require(rl.output.size() == rl.arch.predictive_dim &&
              ml.output.size() == ml.arch.predictive_dim,
          ErrorCode::kShape, "FusePretrained: output weight shape mismatch");

  ModelParams fused;
  fused.arch = rl.arch;
  fused.arch.variant = Variant::kFused;
  fused.arch.embedding_dim = ml.arch.embedding_dim;
  fused.arch.mlp_dims = ml.arch.mlp_dims;
  ValidateArch(fused.arch);
  fused.rl = rl.rl;
  fused.ml = ml.ml;
  const int d = fused.arch.predictive_dim;
  fused.output.resize(2 * d);
  fused.output.head(d) = alpha * rl.output;
  fused.output.tail(d) = (1.0 - alpha) * ml.output;
  return fused;
}

}  // namespace cfnet
