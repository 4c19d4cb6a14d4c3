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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <map>
#include <stdexcept>

#include "cfnet/numkernel.hpp"

namespace oracle {

Mat ToMat(const cfnet::Matrix& m) {
  Mat out(static_cast<std::size_t>(m.rows()),
          Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  }
  return out;
}

Vec ToVec(const cfnet::Vector& v) {
  Vec out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = v[k];
  return out;
}

Vec MatTVec(const Mat& w, const Vec& x) {
  if (w.size() != x.size()) throw std::invalid_argument("MatTVec: shape");
  const std::size_t cols = w.empty() ? 0 : w[0].size();
  Vec y(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < w.size(); ++r) acc += w[r][c] * x[r];
    y[c] = acc;
  }
  return y;
}

Vec DenseLayer(const cfnet::DenseLayer& layer, const Vec& x) {
  Vec y = MatTVec(ToMat(layer.weight), x);
  for (std::size_t c = 0; c < y.size(); ++c) {
    y[c] += layer.bias[static_cast<Eigen::Index>(c)];
    if (layer.activation == cfnet::Activation::kReLU && y[c] < 0.0) y[c] = 0.0;
  }
  return y;
}

Vec Indicator(const std::vector<cfnet::Index>& active, int n) {
  Vec v(static_cast<std::size_t>(n), 0.0);
  for (cfnet::Index j : active) v[static_cast<std::size_t>(j)] = 1.0;
  return v;
}

namespace {

Vec Tower(const cfnet::Matrix& projection,
          const std::vector<cfnet::DenseLayer>& layers, const Vec& input) {
  Vec a = MatTVec(ToMat(projection), input);
  for (const auto& layer : layers) a = DenseLayer(layer, a);
  return a;
}

double Dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

void RlPredictive(const cfnet::ModelParams& p, const Vec& user_row,
                  const Vec& item_col, Vec& out) {
  const Vec pu = Tower(p.rl.user_projection, p.rl.user_layers, user_row);
  const Vec qi = Tower(p.rl.item_projection, p.rl.item_layers, item_col);
  out.assign(pu.size(), 0.0);
  for (std::size_t k = 0; k < pu.size(); ++k) out[k] = pu[k] * qi[k];
}

void MlPredictive(const cfnet::ModelParams& p, const Vec& user_row,
                  const Vec& item_col, Vec& out) {
  const Vec pu = MatTVec(ToMat(p.ml.user_embedding), user_row);
  const Vec qi = MatTVec(ToMat(p.ml.item_embedding), item_col);
  Vec a = pu;
  a.insert(a.end(), qi.begin(), qi.end());
  for (const auto& layer : p.ml.layers) a = DenseLayer(layer, a);
  out = a;
}

double Logit(const cfnet::ModelParams& p, const std::vector<cfnet::Index>& row,
             const std::vector<cfnet::Index>& col) {
  const Vec user_row = Indicator(row, p.arch.num_items);
  const Vec item_col = Indicator(col, p.arch.num_users);
  Vec predictive;
  if (p.arch.variant == cfnet::Variant::kRl) {
    RlPredictive(p, user_row, item_col, predictive);
  } else if (p.arch.variant == cfnet::Variant::kMl) {
    MlPredictive(p, user_row, item_col, predictive);
  } else {
    Vec rl, ml;
    RlPredictive(p, user_row, item_col, rl);
    MlPredictive(p, user_row, item_col, ml);
    predictive = rl;
    predictive.insert(predictive.end(), ml.begin(), ml.end());
  }
  return Dot(ToVec(p.output), predictive);
}

long double SigmoidLongDouble(long double logit) {
  return 1.0L / (1.0L + std::exp(-logit));
}

long double BceLongDouble(long double logit, long double label) {
  // log s = -log(1 + e^-z), log(1 - s) = -log(1 + e^z).
  const long double log_s = -std::log1p(std::exp(-logit));
  const long double log_1ms = -std::log1p(std::exp(logit));
  return -(label * log_s + (1.0L - label) * log_1ms);
}

double GenericNdcg(const std::vector<int>& relevance, int k) {
  double dcg = 0.0;
  for (int pos = 0; pos < k && pos < static_cast<int>(relevance.size());
       ++pos) {
    dcg += (std::pow(2.0, relevance[pos]) - 1.0) / std::log2(pos + 2.0);
  }
  std::vector<int> ideal = relevance;
  std::sort(ideal.rbegin(), ideal.rend());
  double idcg = 0.0;
  for (int pos = 0; pos < k && pos < static_cast<int>(ideal.size()); ++pos) {
    idcg += (std::pow(2.0, ideal[pos]) - 1.0) / std::log2(pos + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

int RankByCounting(const std::vector<double>& scores,
                   const std::vector<cfnet::Index>& items) {
  int ahead = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[0] ||
        (scores[j] == scores[0] && items[j] < items[0])) {
      ++ahead;
    }
  }
  return ahead + 1;
}

std::set<std::pair<std::string, std::string>> BruteKCore(
    const cfnet::RatingLog& log, int min_user, int min_item) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : log.records) pairs.insert({r.user, r.item});
  for (bool changed = true; changed;) {
    changed = false;
    std::map<std::string, int> by_user, by_item;
    for (const auto& [u, i] : pairs) {
      ++by_user[u];
      ++by_item[i];
    }
    for (auto it = pairs.begin(); it != pairs.end();) {
      if (by_user[it->first] < min_user || by_item[it->second] < min_item) {
        it = pairs.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  return pairs;
}

std::vector<long double> AdamTrace(long double theta,
                                   const std::vector<long double>& grads,
                                   long double lr, long double beta1,
                                   long double beta2, long double eps) {
  std::vector<long double> out;
  long double m = 0.0L, v = 0.0L;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const long double g = grads[t - 1];
    m = beta1 * m + (1.0L - beta1) * g;
    v = beta2 * v + (1.0L - beta2) * g * g;
    const long double m_hat = m / (1.0L - std::pow(beta1, (long double)t));
    const long double v_hat = v / (1.0L - std::pow(beta2, (long double)t));
    theta -= lr * m_hat / (std::sqrt(v_hat) + eps);
    out.push_back(theta);
  }
  return out;
}

}  // namespace oracle

namespace fixture {

cfnet::ArchSpec RandomArch(cfnet::Variant variant, cfnet::Index users,
                           cfnet::Index items, int max_dim,
                           std::mt19937_64& g) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_int_distribution<int> depth(0, 2);
  cfnet::ArchSpec a;
  a.variant = variant;
  a.num_users = users;
  a.num_items = items;
  a.predictive_dim = dim(g);
  if (a.has_rl()) {
    for (auto* tower : {&a.user_tower, &a.item_tower}) {
      const int hidden = depth(g);
      // The projection width alone may already be the predictive width.
      for (int h = 0; h < hidden; ++h) tower->push_back(dim(g));
      tower->push_back(a.predictive_dim);
    }
  }
  if (a.has_ml()) {
    a.embedding_dim = dim(g);
    const int hidden = depth(g);
    for (int h = 0; h < hidden; ++h) a.mlp_dims.push_back(dim(g));
    a.mlp_dims.push_back(a.predictive_dim);
  }
  cfnet::ValidateArch(a);
  return a;
}

std::vector<cfnet::Interaction> RandomInteractions(cfnet::Index users,
                                                   cfnet::Index items,
                                                   double density,
                                                   int min_per_user,
                                                   std::mt19937_64& g) {
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<cfnet::Index> pick(0, items - 1);
  std::vector<cfnet::Interaction> out;
  for (cfnet::Index u = 0; u < users; ++u) {
    std::set<cfnet::Index> row;
    for (cfnet::Index i = 0; i < items; ++i) {
      if (keep(g)) row.insert(i);
    }
    while (static_cast<int>(row.size()) < std::min<int>(min_per_user, items)) {
      row.insert(pick(g));
    }
    for (cfnet::Index i : row) out.push_back({u, i, 0});
  }
  return out;
}

cfnet::RatingLog RandomRatingLog(int users, int items, int max_per_user,
                                 std::mt19937_64& g) {
  std::uniform_int_distribution<int> count(1, max_per_user);
  std::uniform_int_distribution<int> item(0, items - 1);
  std::uniform_int_distribution<int> stamp(0, 50);
  cfnet::RatingLog log;
  for (int u = 0; u < users; ++u) {
    const int n = count(g);
    for (int k = 0; k < n; ++k) {
      log.records.push_back({"u" + std::to_string(u),
                             "i" + std::to_string(item(g)), 3.0,
                             static_cast<std::int64_t>(stamp(g))});
    }
  }
  return log;
}

std::vector<cfnet::Index> RandomSubset(int n, double p, std::mt19937_64& g) {
  std::bernoulli_distribution keep(p);
  std::vector<cfnet::Index> out;
  for (int j = 0; j < n; ++j) {
    if (keep(g)) out.push_back(j);
  }
  return out;
}

namespace {

bool NearKink(const std::vector<cfnet::DenseBatchCache>& layers) {
  for (const auto& c : layers) {
    if ((c.pre_activation.array().abs() < 1e-3).any()) return true;
  }
  return false;
}

}  // namespace

GradCheckReport GradientCheck(cfnet::Variant variant, std::uint64_t seed,
                              int max_dim, double h) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> size(2, 6);
  std::normal_distribution<double> weight(0.0, 0.5);
  GradCheckReport report;
  for (;;) {
    const cfnet::Index users = size(g), items = size(g);
    const cfnet::ArchSpec arch = RandomArch(variant, users, items, max_dim, g);
    cfnet::ModelParams params = cfnet::AllocateModel(arch);
    for (auto& t : cfnet::Tensors(params)) {
      for (double& v : t.data) v = weight(g);
    }
    auto inter = RandomInteractions(users, items, 0.4, 1, g);
    std::vector<std::vector<cfnet::Index>> rows(users), cols(items);
    for (const auto& x : inter) rows[x.user].push_back(x.item);
    for (cfnet::Index i = 0; i < items; ++i) {
      for (const auto& x : inter) {
        if (x.item == i) cols[i].push_back(x.user);
      }
      if (cols[i].empty()) {
        // Keep every column non-empty; rows stay consistent with columns.
        const cfnet::Index u = static_cast<cfnet::Index>(g() % users);
        cols[i].push_back(u);
        rows[u].insert(
            std::lower_bound(rows[u].begin(), rows[u].end(), i), i);
      }
    }
    std::uniform_int_distribution<int> batch_size(1, 4);
    const int batch = batch_size(g);
    std::vector<std::vector<cfnet::Index>> b_rows, b_cols;
    std::vector<double> labels;
    for (int b = 0; b < batch; ++b) {
      const auto u = static_cast<cfnet::Index>(g() % users);
      const auto i = static_cast<cfnet::Index>(g() % items);
      b_rows.push_back(rows[u]);
      b_cols.push_back(cols[i]);
      labels.push_back(static_cast<double>(g() % 2));
    }
    std::vector<cfnet::IndexList> r_lists(b_rows.begin(), b_rows.end());
    std::vector<cfnet::IndexList> c_lists(b_cols.begin(), b_cols.end());
    const cfnet::ForwardCache cache = cfnet::Forward(params, r_lists, c_lists);
    if (NearKink(cache.rl.user_layers) || NearKink(cache.rl.item_layers) ||
        NearKink(cache.ml.layers)) {
      ++report.redrawn;
      continue;
    }

    std::vector<double> dlogits(batch);
    for (int b = 0; b < batch; ++b) {
      dlogits[b] = (cfnet::Sigmoid(cache.logits[b]) - labels[b]) / batch;
    }
    cfnet::ModelParams grads = cfnet::ZerosLike(params);
    cfnet::Backward(params, cache, dlogits, grads);

    auto loss = [&] {
      long double sum = 0.0L;
      for (int b = 0; b < batch; ++b) {
        sum += oracle::BceLongDouble(oracle::Logit(params, b_rows[b], b_cols[b]),
                             labels[b]);
      }
      return static_cast<double>(sum / batch);
    };
    auto param_views = cfnet::Tensors(params);
    auto grad_views = cfnet::Tensors(grads);
    for (std::size_t t = 0; t < param_views.size(); ++t) {
      const auto numeric = cfnet::CentralDifference(loss, param_views[t].data, h);
      for (std::size_t k = 0; k < numeric.size(); ++k) {
        const double err = cfnet::RelativeError(grad_views[t].data[k], numeric[k]);
        ++report.checked;
        if (err > report.max_rel_error) {
          report.max_rel_error = err;
          report.worst_tensor = param_views[t].name;
        }
      }
    }
    return report;
  }
}

void WriteSyntheticRaw(const std::string& path, int users, int items,
                       int min_per_user, int max_per_user, std::uint64_t seed,
                       cfnet::RatingFormat format, double skew) {
  std::mt19937_64 g(seed);
  constexpr int kBlocks = 8;
  std::vector<double> weight(items);
  for (int i = 0; i < items; ++i) weight[i] = std::pow(i + 10.0, -skew);
  std::uniform_int_distribution<int> count(min_per_user, max_per_user);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const char* sep = format == cfnet::RatingFormat::kDoubleColon ? "::" : "\t";
  for (int u = 0; u < users; ++u) {
    const int block = u % kBlocks;
    // Users mostly pick from their block's items.
    std::vector<double> w(weight);
    for (int i = 0; i < items; ++i) {
      if (i % kBlocks == block) w[i] *= 6.0;
    }
    std::discrete_distribution<int> pick(w.begin(), w.end());
    std::set<int> chosen;
    const int n = std::min(count(g), items / 2);
    while (static_cast<int>(chosen.size()) < n) chosen.insert(pick(g));
    std::vector<int> order(chosen.begin(), chosen.end());
    std::shuffle(order.begin(), order.end(), g);
    long long ts = 978300000 + u;
    for (int i : order) {
      ts += 1 + static_cast<long long>(coin(g) * 100);
      out << (u + 1) << sep << (i + 1) << sep << (1 + (u + i) % 5) << sep
          << ts << '\n';
    }
  }
}

std::string TempDir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::current_path() / "tmp" / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace fixture
