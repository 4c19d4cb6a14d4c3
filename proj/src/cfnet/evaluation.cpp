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

#include "cfnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "cfnet/error.hpp"

namespace cfnet {

std::vector<Index> Candidates(const TestCase& test_case) {
  std::vector<Index> items;
  items.reserve(test_case.negatives.size() + 1);
  items.push_back(test_case.positive_item);
  items.insert(items.end(), test_case.negatives.begin(),
               test_case.negatives.end());
  return items;
}

ModelScorer::ModelScorer(const ModelParams& params,
                         const InteractionMatrix& train, std::string id)
    : params_(params), train_(train), id_(std::move(id)) {
  Require(params.arch.num_users == train.num_users() &&
              params.arch.num_items == train.num_items(),
          ErrorCode::kShape,
          "model was built for " + std::to_string(params.arch.num_users) +
              " users x " + std::to_string(params.arch.num_items) +
              " items, dataset has " + std::to_string(train.num_users()) +
              " x " + std::to_string(train.num_items()));
}

std::string ModelScorer::id() const {
  return id_.empty() ? VariantName(params_.arch.variant) : id_;
}

void ModelScorer::Score(const TestCase& test_case,
                        std::span<double> out) const {
  const std::vector<Index> items = Candidates(test_case);
  Require(out.size() == items.size(), ErrorCode::kShape,
          "Score: output span has the wrong length");
  Require(test_case.user >= 0 && test_case.user < train_.num_users(),
          ErrorCode::kShape, "Score: user out of range");
  for (Index j : items) {
    Require(j >= 0 && j < train_.num_items(), ErrorCode::kShape,
            "Score: candidate item out of range");
  }
  std::vector<IndexList> rows(items.size(), train_.row(test_case.user));
  std::vector<IndexList> cols;
  cols.reserve(items.size());
  for (Index j : items) cols.push_back(train_.col(j));
  const ForwardCache cache = Forward(params_, std::move(rows), std::move(cols));
  for (std::size_t k = 0; k < items.size(); ++k) {
    out[k] = Sigmoid(cache.logits[static_cast<Eigen::Index>(k)]);
  }
}

std::vector<double> ItemPopScores(const InteractionMatrix& train) {
  std::vector<double> scores(train.num_items());
  for (Index i = 0; i < train.num_items(); ++i) {
    scores[i] = static_cast<double>(train.col(i).size());
  }
  return scores;
}

ItemPopScorer::ItemPopScorer(const InteractionMatrix& train)
    : popularity_(ItemPopScores(train)) {}

void ItemPopScorer::Score(const TestCase& test_case,
                          std::span<double> out) const {
  const std::vector<Index> items = Candidates(test_case);
  Require(out.size() == items.size(), ErrorCode::kShape,
          "Score: output span has the wrong length");
  for (std::size_t k = 0; k < items.size(); ++k) {
    Require(items[k] >= 0 &&
                items[k] < static_cast<Index>(popularity_.size()),
            ErrorCode::kShape, "Score: candidate item out of range");
    out[k] = popularity_[items[k]];
  }
}

std::vector<double> ScoreCandidates(const ModelParams& params,
                                    const InteractionMatrix& train,
                                    const TestCase& test_case) {
  std::vector<double> scores(test_case.negatives.size() + 1);
  ModelScorer(params, train).Score(test_case, scores);
  return scores;
}

RankedList RankAndTruncate(std::span<const double> scores,
                           const TestCase& test_case, int k) {
  const std::vector<Index> items = Candidates(test_case);
  Require(scores.size() == items.size(), ErrorCode::kShape,
          "RankAndTruncate: expected " + std::to_string(items.size()) +
              " scores, got " + std::to_string(scores.size()));
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return items[a] < items[b];
                   });
  RankedList list;
  list.user = test_case.user;
  list.k = k;
  list.items.reserve(items.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    list.items.push_back(items[order[pos]]);
    if (order[pos] == 0) list.position_of_positive = static_cast<int>(pos) + 1;
  }
  return list;
}

int HitRatioAtK(int rank, int k) { return rank >= 1 && rank <= k ? 1 : 0; }

double NdcgAtK(int rank, int k) {
  if (rank < 1 || rank > k) return 0.0;
  return std::log(2.0) / std::log(static_cast<double>(rank) + 1.0);
}

EvalReport Evaluate(const Scorer& scorer, std::span<const TestCase> test_cases,
                    int k) {
  Require(!test_cases.empty(), ErrorCode::kInvalidArgument,
          "Evaluate: no test cases");
  Require(k >= 1, ErrorCode::kInvalidArgument, "Evaluate: K must be >= 1");
  EvalReport report;
  report.k = k;
  report.model_id = scorer.id();
  report.per_user.reserve(test_cases.size());
  std::vector<double> scores;
  for (const TestCase& tc : test_cases) {
    scores.assign(tc.negatives.size() + 1, 0.0);
    scorer.Score(tc, scores);
    const RankedList ranked = RankAndTruncate(scores, tc, k);
    const int rank = ranked.position_of_positive;
    report.per_user.push_back(
        {tc.user, rank, HitRatioAtK(rank, k), NdcgAtK(rank, k)});
  }
  // Fixed summation order regardless of how test cases were supplied.
  std::stable_sort(report.per_user.begin(), report.per_user.end(),
                   [](const UserEval& a, const UserEval& b) {
                     return a.user < b.user;
                   });
  double hits = 0.0;
  double ndcg = 0.0;
  for (const auto& u : report.per_user) {
    hits += u.hit;
    ndcg += u.ndcg;
  }
  const auto n = static_cast<double>(report.per_user.size());
  report.hit_ratio = hits / n;
  report.ndcg = ndcg / n;
  return report;
}

void WriteEvalReport(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  char buf[128];
  out << "# model\t" << report.model_id << '\n'
      << "# dataset\t" << report.dataset << '\n'
      << "# seed\t" << report.seed << '\n'
      << "# k\t" << report.k << '\n'
      << "user\trank\thr\tndcg\n";
  for (const auto& u : report.per_user) {
    std::snprintf(buf, sizeof(buf), "%d\t%d\t%d\t%.12f\n", u.user, u.rank,
                  u.hit, u.ndcg);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "# mean_hr\t%.6f\n# mean_ndcg\t%.6f\n",
                report.hit_ratio, report.ndcg);
  out << buf << "# users\t" << report.per_user.size() << '\n';
  Require(out.good(), ErrorCode::kIo, "write failed: " + path);
}

}  // namespace cfnet
