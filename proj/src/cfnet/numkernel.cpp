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

#include "cfnet/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cfnet/error.hpp"

namespace cfnet {
namespace {

void ApplyActivation(Activation activation, const Matrix& pre, Matrix& out) {
  if (activation == Activation::kReLU) {
    out = pre.cwiseMax(0.0);
  } else {
    out = pre;
  }
}

std::string Dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix GaussianInit(Eigen::Index rows, Eigen::Index cols, double mean,
                    double stddev, Rng& rng) {
  Require(rows > 0 && cols > 0, ErrorCode::kInvalidArgument,
          "GaussianInit: non-positive dimensions " + Dims(rows, cols));
  Require(stddev > 0.0, ErrorCode::kInvalidArgument,
          "GaussianInit: stddev must be positive");
  std::normal_distribution<double> dist(mean, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
  return m;
}

DenseLayer MakeDenseLayer(Eigen::Index in_dim, Eigen::Index out_dim,
                          Activation activation, double stddev, Rng& rng) {
  DenseLayer layer;
  layer.weight = GaussianInit(in_dim, out_dim, 0.0, stddev, rng);
  layer.bias = Vector::Zero(out_dim);
  layer.activation = activation;
  return layer;
}

Vector DenseForward(const DenseLayer& layer, const Vector& input,
                    DenseCache* cache) {
  Require(input.size() == layer.in_dim(), ErrorCode::kShape,
          "DenseForward: input length " + std::to_string(input.size()) +
              " does not match layer input " + std::to_string(layer.in_dim()));
  Require(layer.bias.size() == layer.out_dim(), ErrorCode::kShape,
          "DenseForward: bias length does not match weight columns");
  Vector pre = layer.weight.transpose() * input + layer.bias;
  Vector out = layer.activation == Activation::kReLU ? Vector(pre.cwiseMax(0.0))
                                                     : pre;
  if (cache != nullptr) {
    cache->input = input;
    cache->pre_activation = std::move(pre);
  }
  return out;
}

DenseGrads DenseBackward(const DenseLayer& layer, const DenseCache& cache,
                         const Vector& grad_output) {
  Require(grad_output.size() == layer.out_dim(), ErrorCode::kShape,
          "DenseBackward: grad_output length does not match layer output");
  Require(cache.input.size() == layer.in_dim() &&
              cache.pre_activation.size() == layer.out_dim(),
          ErrorCode::kShape, "DenseBackward: cache does not match layer");
  Vector grad_pre = grad_output;
  if (layer.activation == Activation::kReLU) {
    for (Eigen::Index k = 0; k < grad_pre.size(); ++k) {
      if (!(cache.pre_activation[k] > 0.0)) grad_pre[k] = 0.0;
    }
  }
  DenseGrads grads;
  grads.weight = cache.input * grad_pre.transpose();
  grads.bias = grad_pre;
  grads.input = layer.weight * grad_pre;
  return grads;
}

Matrix DenseForwardBatch(const DenseLayer& layer, const Matrix& input,
                         DenseBatchCache* cache) {
  Require(input.cols() == layer.in_dim(), ErrorCode::kShape,
          "DenseForwardBatch: input " + Dims(input.rows(), input.cols()) +
              " does not match layer " +
              Dims(layer.in_dim(), layer.out_dim()));
  Matrix pre = input * layer.weight;
  pre.rowwise() += layer.bias.transpose();
  Matrix out;
  ApplyActivation(layer.activation, pre, out);
  if (cache != nullptr) {
    cache->input = input;
    cache->pre_activation = std::move(pre);
  }
  return out;
}

Matrix DenseBackwardBatch(const DenseLayer& layer,
                          const DenseBatchCache& cache, Matrix grad_output,
                          Matrix& grad_weight, Vector& grad_bias,
                          bool want_input_grad) {
  Require(grad_output.cols() == layer.out_dim() &&
              grad_output.rows() == cache.pre_activation.rows(),
          ErrorCode::kShape, "DenseBackwardBatch: grad_output shape mismatch");
  if (layer.activation == Activation::kReLU) {
    grad_output = (cache.pre_activation.array() > 0.0)
                      .select(grad_output, 0.0);
  }
  grad_weight.noalias() += cache.input.transpose() * grad_output;
  grad_bias.noalias() += grad_output.colwise().sum().transpose();
  if (!want_input_grad) return Matrix();
  Matrix grad_input = grad_output * layer.weight.transpose();
  return grad_input;
}

void CheckActiveIndices(IndexList active, Eigen::Index limit) {
  for (std::size_t k = 0; k < active.size(); ++k) {
    Require(active[k] >= 0 && active[k] < limit, ErrorCode::kInvalidArgument,
            "active index " + std::to_string(active[k]) + " out of range [0, " +
                std::to_string(limit) + ")");
    Require(k == 0 || active[k - 1] < active[k], ErrorCode::kInvalidArgument,
            "active indices must be strictly increasing");
  }
}

Vector SparseProjectForward(const Matrix& weight, IndexList active) {
  CheckActiveIndices(active, weight.rows());
  Vector out = Vector::Zero(weight.cols());
  for (Index j : active) out += weight.row(j).transpose();
  return out;
}

SparseRowGrad SparseProjectBackward(const Vector& grad_output,
                                    IndexList active) {
  CheckActiveIndices(active, std::numeric_limits<Index>::max());
  SparseRowGrad grad;
  grad.rows.assign(active.begin(), active.end());
  grad.values.resize(static_cast<Eigen::Index>(active.size()),
                     grad_output.size());
  for (Eigen::Index r = 0; r < grad.values.rows(); ++r) {
    grad.values.row(r) = grad_output.transpose();
  }
  return grad;
}

void SparseProjectForwardBatch(const Matrix& weight,
                               std::span<const IndexList> actives,
                               Matrix& out) {
  out.setZero(static_cast<Eigen::Index>(actives.size()), weight.cols());
  for (std::size_t b = 0; b < actives.size(); ++b) {
    auto row = out.row(static_cast<Eigen::Index>(b));
    for (Index j : actives[b]) row += weight.row(j);
  }
}

void SparseProjectBackwardAccumulate(const Matrix& grad_output,
                                     std::span<const IndexList> actives,
                                     Matrix& grad_weight) {
  Require(grad_output.rows() == static_cast<Eigen::Index>(actives.size()) &&
              grad_output.cols() == grad_weight.cols(),
          ErrorCode::kShape, "SparseProjectBackwardAccumulate: shape mismatch");
  for (std::size_t b = 0; b < actives.size(); ++b) {
    auto g = grad_output.row(static_cast<Eigen::Index>(b));
    for (Index j : actives[b]) grad_weight.row(j) += g;
  }
}

Vector ElementwiseProduct(const Vector& a, const Vector& b) {
  Require(a.size() == b.size(), ErrorCode::kShape,
          "ElementwiseProduct: length mismatch");
  return a.cwiseProduct(b);
}

double Sigmoid(double logit) {
  // Clamped so the result stays strictly inside (0, 1) even where the exact
  // value is not representable.
  constexpr double kUpper = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  constexpr double kLower = std::numeric_limits<double>::denorm_min();
  double p;
  if (logit >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-logit));
  } else {
    const double e = std::exp(logit);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kLower, kUpper);
}

double LogSigmoid(double logit) {
  if (logit >= 0.0) return -std::log1p(std::exp(-logit));
  return logit - std::log1p(std::exp(logit));
}

AdamState MakeAdamState(const ParamList& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.size(), 0.0);
    state.second_moment.emplace_back(p.size(), 0.0);
  }
  return state;
}

namespace {

void CheckShapes(const ParamList& params, const GradList& grads) {
  Require(params.size() == grads.size(), ErrorCode::kShape,
          "optimizer: parameter/gradient count mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    Require(params[t].size() == grads[t].size(), ErrorCode::kShape,
            "optimizer: tensor " + std::to_string(t) + " size mismatch");
  }
}

}  // namespace

void AdamStep(const ParamList& params, const GradList& grads, AdamState& state,
              double learning_rate) {
  CheckShapes(params, grads);
  Require(state.first_moment.size() == params.size(), ErrorCode::kShape,
          "AdamStep: state does not match parameters");
  Require(learning_rate >= 0.0, ErrorCode::kInvalidArgument,
          "AdamStep: learning rate must be non-negative");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    Require(m.size() == params[k].size(), ErrorCode::kShape,
            "AdamStep: moment shape mismatch");
    const auto n = static_cast<Eigen::Index>(params[k].size());
    Eigen::Map<Eigen::ArrayXd> p(params[k].data(), n);
    Eigen::Map<const Eigen::ArrayXd> g(grads[k].data(), n);
    Eigen::Map<Eigen::ArrayXd> mm(m.data(), n);
    Eigen::Map<Eigen::ArrayXd> vv(v.data(), n);
    mm = c.beta1 * mm + (1.0 - c.beta1) * g;
    vv = c.beta2 * vv + (1.0 - c.beta2) * g.square();
    p -= learning_rate * (mm / correction1) /
         ((vv / correction2).sqrt() + c.epsilon);
  }
}

void SgdStep(const ParamList& params, const GradList& grads,
             double learning_rate) {
  CheckShapes(params, grads);
  Require(learning_rate >= 0.0, ErrorCode::kInvalidArgument,
          "SgdStep: learning rate must be non-negative");
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k].data();
    const double* g = grads[k].data();
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      p[i] -= learning_rate * g[i];
    }
  }
}

std::vector<double> CentralDifference(const std::function<double()>& loss,
                                      std::span<double> x, double h) {
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double up = loss();
    x[k] = saved - h;
    const double down = loss();
    x[k] = saved;
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

double RelativeError(double a, double b, double floor) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

bool AllFinite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace cfnet
