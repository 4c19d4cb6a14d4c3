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

// Dense and sparse numerical primitives shared by every model variant.
//
// Conventions: a dense layer stores its weight as an (in_dim x out_dim)
// matrix and computes activation(W^T x + b). Batched variants take one
// instance per row, so the same layer computes activation(X W + 1 b^T).
// Everything is 64-bit floating point.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cfnet {

using Index = std::int32_t;
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// A list of active (nonzero) positions of a binary vector, strictly
// increasing.
using IndexList = std::span<const Index>;

enum class Activation { kReLU, kIdentity };

struct DenseLayer {
  Matrix weight;  // in_dim x out_dim
  Vector bias;    // out_dim
  Activation activation = Activation::kReLU;

  Eigen::Index in_dim() const { return weight.rows(); }
  Eigen::Index out_dim() const { return weight.cols(); }
};

struct DenseCache {
  Vector input;
  Vector pre_activation;
};

struct DenseGrads {
  Vector input;
  Matrix weight;
  Vector bias;
};

struct DenseBatchCache {
  Matrix input;           // batch x in_dim
  Matrix pre_activation;  // batch x out_dim
};

// Entries drawn i.i.d. from normal(mean, stddev).
Matrix GaussianInit(Eigen::Index rows, Eigen::Index cols, double mean,
                    double stddev, Rng& rng);

DenseLayer MakeDenseLayer(Eigen::Index in_dim, Eigen::Index out_dim,
                          Activation activation, double stddev, Rng& rng);

Vector DenseForward(const DenseLayer& layer, const Vector& input,
                    DenseCache* cache = nullptr);

// ReLU passes gradient only where the pre-activation is strictly positive.
DenseGrads DenseBackward(const DenseLayer& layer, const DenseCache& cache,
                         const Vector& grad_output);

Matrix DenseForwardBatch(const DenseLayer& layer, const Matrix& input,
                         DenseBatchCache* cache = nullptr);

// Adds the weight and bias gradients into the given accumulators and returns
// the gradient w.r.t. the layer input (empty when want_input_grad is false).
Matrix DenseBackwardBatch(const DenseLayer& layer,
                          const DenseBatchCache& cache, Matrix grad_output,
                          Matrix& grad_weight, Vector& grad_bias,
                          bool want_input_grad = true);

// Throws unless indices are strictly increasing and all below `limit`.
void CheckActiveIndices(IndexList active, Eigen::Index limit);

// Sum of the weight rows named by `active`, i.e. W^T y for the binary vector
// y whose ones sit at `active`. The dense y is never built.
Vector SparseProjectForward(const Matrix& weight, IndexList active);

struct SparseRowGrad {
  std::vector<Index> rows;
  Matrix values;  // rows.size() x dim
};

SparseRowGrad SparseProjectBackward(const Vector& grad_output,
                                    IndexList active);

// Row b of `out` receives the projection of actives[b]. Indices are not
// re-validated here; callers check them once when data is loaded.
void SparseProjectForwardBatch(const Matrix& weight,
                               std::span<const IndexList> actives,
                               Matrix& out);

// grad_weight.row(j) += grad_output.row(b) for every j in actives[b].
void SparseProjectBackwardAccumulate(const Matrix& grad_output,
                                     std::span<const IndexList> actives,
                                     Matrix& grad_weight);

Vector ElementwiseProduct(const Vector& a, const Vector& b);

double Sigmoid(double logit);

// log(sigmoid(x)) without overflow for large |x|.
double LogSigmoid(double logit);

// --- optimizers -------------------------------------------------------------

using ParamList = std::vector<std::span<double>>;
using GradList = std::vector<std::span<const double>>;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;
  AdamConfig config;
};

AdamState MakeAdamState(const ParamList& params, const AdamConfig& config = {});

// Bias-corrected Adam update; increments state.step.
void AdamStep(const ParamList& params, const GradList& grads, AdamState& state,
              double learning_rate);

void SgdStep(const ParamList& params, const GradList& grads,
             double learning_rate);

// --- gradient checking -------------------------------------------------------

// Central differences of `loss` w.r.t. every entry of `x`; `x` is perturbed in
// place and restored.
std::vector<double> CentralDifference(const std::function<double()>& loss,
                                      std::span<double> x, double h = 1e-5);

// |a - b| / max(|a|, |b|, floor).
double RelativeError(double a, double b, double floor = 1e-6);

bool AllFinite(std::span<const double> values);

inline std::span<double> AsSpan(Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<double> AsSpan(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<const double> AsSpan(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> AsSpan(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace cfnet
