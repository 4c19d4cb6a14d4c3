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

// Leave-one-out ranking evaluation: each test case's positive is ranked
// against its sampled negatives and scored with HR@K and NDCG@K.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfnet/data.hpp"
#include "cfnet/models.hpp"

namespace cfnet {

// Candidates are ordered [positive_item, negatives...] everywhere below.
std::vector<Index> Candidates(const TestCase& test_case);

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  // Fills out[j] with the score of Candidates(test_case)[j].
  virtual void Score(const TestCase& test_case, std::span<double> out) const = 0;
};

// Scores with a trained network; users are fed their training-matrix row.
class ModelScorer : public Scorer {
 public:
  ModelScorer(const ModelParams& params, const InteractionMatrix& train,
              std::string id = "");
  std::string id() const override;
  void Score(const TestCase& test_case, std::span<double> out) const override;

 private:
  const ModelParams& params_;
  const InteractionMatrix& train_;
  std::string id_;
};

// Non-personalized: score(i) = number of training interactions of item i.
std::vector<double> ItemPopScores(const InteractionMatrix& train);

class ItemPopScorer : public Scorer {
 public:
  explicit ItemPopScorer(const InteractionMatrix& train);
  std::string id() const override { return "itempop"; }
  void Score(const TestCase& test_case, std::span<double> out) const override;

 private:
  std::vector<double> popularity_;
};

std::vector<double> ScoreCandidates(const ModelParams& params,
                                    const InteractionMatrix& train,
                                    const TestCase& test_case);

struct RankedList {
  Index user = 0;
  std::vector<Index> items;     // every candidate, best first
  int position_of_positive = 0;  // 1-based; 0 when absent
  int k = 10;

  std::span<const Index> top() const {
    return std::span<const Index>(items).first(
        std::min<std::size_t>(items.size(), static_cast<std::size_t>(k)));
  }
};

// Descending score; equal scores ordered by ascending item index.
RankedList RankAndTruncate(std::span<const double> scores,
                           const TestCase& test_case, int k);

// rank is 1-based; rank <= 0 means the positive is absent.
int HitRatioAtK(int rank, int k);
double NdcgAtK(int rank, int k);

struct UserEval {
  Index user = 0;
  int rank = 0;
  int hit = 0;
  double ndcg = 0.0;
};

struct EvalReport {
  int k = 10;
  double hit_ratio = 0.0;
  double ndcg = 0.0;
  std::vector<UserEval> per_user;  // sorted by user
  std::string model_id;
  std::string dataset;
  std::uint64_t seed = 0;
};

EvalReport Evaluate(const Scorer& scorer, std::span<const TestCase> test_cases,
                    int k = 10);

// Header lines "# key\tvalue", then "user\trank\thr\tndcg" rows, then
// "# mean_hr", "# mean_ndcg" and "# users" footer lines.
void WriteEvalReport(const std::string& path, const EvalReport& report);

}  // namespace cfnet
