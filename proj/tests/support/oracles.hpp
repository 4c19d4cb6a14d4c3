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

// Reference implementations used only by tests. Written with plain loops
// over std::vector so they share no code path with the library kernels.

#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cfnet/data.hpp"
#include "cfnet/models.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows x cols

Mat ToMat(const cfnet::Matrix& m);
Vec ToVec(const cfnet::Vector& v);

// y = W^T x for W stored in_dim x out_dim.
Vec MatTVec(const Mat& w, const Vec& x);
Vec DenseLayer(const cfnet::DenseLayer& layer, const Vec& x);

// 0/1 vector of length n with ones at `active`.
Vec Indicator(const std::vector<cfnet::Index>& active, int n);

// Logit from the dense binary user row (length N) and item column
// (length M), composed layer by layer.
void RlPredictive(const cfnet::ModelParams& p, const Vec& user_row,
                  const Vec& item_col, Vec& out);
void MlPredictive(const cfnet::ModelParams& p, const Vec& user_row,
                  const Vec& item_col, Vec& out);
double Logit(const cfnet::ModelParams& p, const std::vector<cfnet::Index>& row,
             const std::vector<cfnet::Index>& col);

// Extended-precision -[y log s + (1-y) log(1-s)], s = 1/(1+e^-z).
long double BceLongDouble(long double logit, long double label);
long double SigmoidLongDouble(long double logit);

// Single relevant item: DCG over the full list divided by the ideal DCG.
double GenericNdcg(const std::vector<int>& ranked_relevance, int k);
// 1-based rank of candidate 0 when sorting by (score desc, item asc),
// computed by counting, without sorting.
int RankByCounting(const std::vector<double>& scores,
                   const std::vector<cfnet::Index>& items);

// Repeat-until-stable k-core filter over (user, item) string pairs.
std::set<std::pair<std::string, std::string>> BruteKCore(
    const cfnet::RatingLog& log, int min_user, int min_item);

// Plain Adam for one scalar parameter and a gradient sequence.
std::vector<long double> AdamTrace(long double theta,
                                   const std::vector<long double>& grads,
                                   long double lr, long double beta1,
                                   long double beta2, long double eps);

}  // namespace oracle

// Random fixtures.
namespace fixture {

// Architecture with every width in [1, max_dim].
cfnet::ArchSpec RandomArch(cfnet::Variant variant, cfnet::Index users,
                           cfnet::Index items, int max_dim, std::mt19937_64& g);

// Each (u, i) present with probability `density`; every user keeps at
// least `min_per_user` items.
std::vector<cfnet::Interaction> RandomInteractions(cfnet::Index users,
                                                   cfnet::Index items,
                                                   double density,
                                                   int min_per_user,
                                                   std::mt19937_64& g);

cfnet::RatingLog RandomRatingLog(int users, int items, int max_per_user,
                                 std::mt19937_64& g);

// Sorted subset of {0..n-1}.
std::vector<cfnet::Index> RandomSubset(int n, double p, std::mt19937_64& g);

// Analytic gradients of the mean BCE over a small random batch compared with
// central differences of the same loss evaluated by oracle::Logit. Every
// tensor, biases included, is drawn from normal(0, 0.5) so no pre-activation
// sits at zero; fixtures with a ReLU input within 1e-3 of the kink are redrawn
// because the finite difference is not defined there.
struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
  int redrawn = 0;
};
GradCheckReport GradientCheck(cfnet::Variant variant, std::uint64_t seed,
                              int max_dim = 8, double h = 1e-5);

// Raw rating file with popularity-skewed items (weight 1/(rank+10)^skew)
// and a planted block structure, so both popularity and personalisation
// carry signal. Each user gets a count in [min_per_user, max_per_user].
// skew = 0 gives uniform popularity.
void WriteSyntheticRaw(const std::string& path, int users, int items,
                       int min_per_user, int max_per_user, std::uint64_t seed,
                       cfnet::RatingFormat format, double skew = 1.0);

// A fresh temporary directory under the build tree.
std::string TempDir(const std::string& tag);

}  // namespace fixture
