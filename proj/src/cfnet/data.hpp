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

// Rating ingestion, the binary interaction matrix, the leave-one-out split
// and negative sampling.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cfnet/numkernel.hpp"

namespace cfnet {

struct RatingRecord {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct RatingLog {
  std::vector<RatingRecord> records;
};

enum class RatingFormat {
  kDoubleColon,   // UserID::ItemID::Rating::Timestamp
  kTabSeparated,  // user \t item \t rating \t timestamp
};

RatingFormat ParseRatingFormat(const std::string& name);

// One record per line. Duplicate (user, item) pairs collapse to the record
// with the latest timestamp, kept at the position of the first occurrence.
RatingLog LoadRatings(const std::string& path, RatingFormat format);
RatingLog ParseRatings(std::istream& in, RatingFormat format,
                       const std::string& source_name);
void DeduplicateLatest(RatingLog& log);

// Repeatedly drops users with fewer than min_user_interactions records and
// items with fewer than min_item_interactions records until neither
// constraint removes anything. Record order is preserved.
RatingLog FilterKCore(const RatingLog& log, int min_user_interactions = 20,
                      int min_item_interactions = 5);

struct IdMaps {
  std::vector<std::string> user_tokens;  // dense index -> external token
  std::vector<std::string> item_tokens;
  std::unordered_map<std::string, Index> user_index;
  std::unordered_map<std::string, Index> item_index;
};

struct Interaction {
  Index user = 0;
  Index item = 0;
  std::int64_t timestamp = 0;
};

// Binary user-item matrix held twice: per-user sorted item lists (rows) and
// per-item sorted user lists (columns).
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  // Pairs may arrive in any order; duplicates are rejected.
  InteractionMatrix(Index num_users, Index num_items,
                    std::vector<std::pair<Index, Index>> pairs);

  Index num_users() const { return num_users_; }
  Index num_items() const { return num_items_; }
  std::size_t nnz() const { return row_items_.size(); }

  IndexList row(Index user) const {
    return {row_items_.data() + row_offsets_[user],
            row_items_.data() + row_offsets_[user + 1]};
  }
  IndexList col(Index item) const {
    return {col_users_.data() + col_offsets_[item],
            col_users_.data() + col_offsets_[item + 1]};
  }
  bool contains(Index user, Index item) const;

 private:
  Index num_users_ = 0;
  Index num_items_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<Index> row_items_;
  std::vector<std::size_t> col_offsets_{0};
  std::vector<Index> col_users_;
};

struct SplitDataset {
  InteractionMatrix train;
  std::vector<Interaction> train_records;  // sorted by (user, item)
  std::vector<Interaction> test;           // one per user, indexed by user
  std::size_t dropped_users = 0;

  Index num_users() const { return train.num_users(); }
  Index num_items() const { return train.num_items(); }
};

struct TestCase {
  Index user = 0;
  Index positive_item = 0;
  std::vector<Index> negatives;
};

// Holds out each user's latest interaction (ties: larger dense item index).
// Users with a single interaction are dropped and counted. Dense ids follow
// first appearance among the surviving records.
std::pair<IdMaps, SplitDataset> BuildSplit(const RatingLog& log);

struct TrainInstance {
  Index user = 0;
  Index item = 0;
  double label = 0.0;
};

struct EpochBatchSet {
  std::vector<TrainInstance> instances;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t saturated_users = 0;  // rows covering every item
};

// Uniform draw from {0..N-1} minus row(user). Requires a non-full row.
Index SampleUnobserved(const InteractionMatrix& train, Index user, Rng& rng);

// For each train positive, `ratio` items drawn uniformly from the user's
// unobserved items. Output order is (user, item) with each positive followed
// by its negatives.
EpochBatchSet SampleTrainNegatives(const InteractionMatrix& train, int ratio,
                                   Rng& rng);

// `count` distinct items per user outside train row and the test positive.
std::vector<TestCase> SampleTestNegatives(const SplitDataset& split,
                                          int count, Rng& rng);

struct DatasetStats {
  Index users = 0;
  Index items = 0;
  std::size_t ratings = 0;  // train + test
  std::size_t train_nnz = 0;
  std::size_t dropped_users = 0;
  double sparsity = 0.0;
};

DatasetStats ComputeStats(const SplitDataset& split);

// Canonical on-disk form, keyed by a path prefix:
//   <prefix>.train.rating   user \t item \t 1 \t timestamp, sorted
//   <prefix>.test.rating    user \t item \t 1 \t timestamp
//   <prefix>.test.negative  (user,item) \t neg_1 ... \t neg_n
//   <prefix>.stats          key \t value
struct CanonicalDataset {
  SplitDataset split;
  std::vector<TestCase> test_cases;
};

void WriteCanonical(const std::string& prefix, const SplitDataset& split,
                    const std::vector<TestCase>& test_cases);
void WriteStats(const std::string& path, const DatasetStats& stats);
CanonicalDataset ReadCanonical(const std::string& prefix);

}  // namespace cfnet
