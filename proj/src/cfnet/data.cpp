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

#include "cfnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>
#include <tuple>

#include "cfnet/error.hpp"

namespace cfnet {
namespace {

std::vector<std::string_view> Split(std::string_view line,
                                    std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
  return fields;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
bool ParseNumber(std::string_view s, T& out) {
  s = Trim(s);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void ParseFail(const std::string& source, std::size_t line_no,
                            const std::string& why) {
  Fail(ErrorCode::kParse,
       source + ":" + std::to_string(line_no) + ": " + why);
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  return out;
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path);
  return in;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    return std::hash<std::string>()(p.first) * 1000003u ^
           std::hash<std::string>()(p.second);
  }
};

}  // namespace

RatingFormat ParseRatingFormat(const std::string& name) {
  if (name == "double_colon" || name == "ml1m" || name == "ml-1m") {
    return RatingFormat::kDoubleColon;
  }
  if (name == "tab_separated" || name == "tsv") {
    return RatingFormat::kTabSeparated;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown rating format '" + name + "'");
}

RatingLog ParseRatings(std::istream& in, RatingFormat format,
                       const std::string& source_name) {
  RatingLog log;
  std::string line;
  std::size_t line_no = 0;
  const std::string_view sep = format == RatingFormat::kDoubleColon ? "::"
                                                                    : "\t";
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = Trim(line);
    if (view.empty()) continue;
    const auto fields = Split(view, sep);
    const bool count_ok = format == RatingFormat::kDoubleColon
                              ? fields.size() == 4
                              : fields.size() >= 4;
    if (!count_ok) {
      ParseFail(source_name, line_no,
                "expected 4 fields, got " + std::to_string(fields.size()));
    }
    RatingRecord rec;
    rec.user = std::string(Trim(fields[0]));
    rec.item = std::string(Trim(fields[1]));
    if (rec.user.empty() || rec.item.empty()) {
      ParseFail(source_name, line_no, "empty user or item token");
    }
    if (!ParseNumber(fields[2], rec.rating)) {
      ParseFail(source_name, line_no, "bad rating value");
    }
    if (!ParseNumber(fields[3], rec.timestamp) || rec.timestamp < 0) {
      ParseFail(source_name, line_no, "bad timestamp");
    }
    log.records.push_back(std::move(rec));
  }
  Require(!log.records.empty(), ErrorCode::kParse,
          source_name + ": no rating records");
  DeduplicateLatest(log);
  return log;
}

RatingLog LoadRatings(const std::string& path, RatingFormat format) {
  std::ifstream in = OpenIn(path);
  return ParseRatings(in, format, path);
}

void DeduplicateLatest(RatingLog& log) {
  std::unordered_map<std::pair<std::string, std::string>, std::size_t,
                     PairHash>
      position;
  std::vector<RatingRecord> kept;
  kept.reserve(log.records.size());
  for (auto& rec : log.records) {
    auto key = std::make_pair(rec.user, rec.item);
    auto it = position.find(key);
    if (it == position.end()) {
      position.emplace(std::move(key), kept.size());
      kept.push_back(std::move(rec));
    } else if (rec.timestamp >= kept[it->second].timestamp) {
      kept[it->second] = std::move(rec);
    }
  }
  log.records = std::move(kept);
}

RatingLog FilterKCore(const RatingLog& log, int min_user_interactions,
                      int min_item_interactions) {
  Require(min_user_interactions >= 1 && min_item_interactions >= 1,
          ErrorCode::kInvalidArgument, "k-core thresholds must be >= 1");
  std::vector<bool> alive(log.records.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, int> user_count;
    std::unordered_map<std::string, int> item_count;
    for (std::size_t k = 0; k < log.records.size(); ++k) {
      if (!alive[k]) continue;
      ++user_count[log.records[k].user];
      ++item_count[log.records[k].item];
    }
    for (std::size_t k = 0; k < log.records.size(); ++k) {
      if (!alive[k]) continue;
      const auto& rec = log.records[k];
      if (user_count[rec.user] < min_user_interactions ||
          item_count[rec.item] < min_item_interactions) {
        alive[k] = false;
        changed = true;
      }
    }
  }
  RatingLog out;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    if (alive[k]) out.records.push_back(log.records[k]);
  }
  Require(!out.records.empty(), ErrorCode::kInvalidArgument,
          "k-core filtering removed every record; dataset too sparse for "
          "thresholds (" +
              std::to_string(min_user_interactions) + ", " +
              std::to_string(min_item_interactions) + ")");
  return out;
}

InteractionMatrix::InteractionMatrix(Index num_users, Index num_items,
                                     std::vector<std::pair<Index, Index>> pairs)
    : num_users_(num_users), num_items_(num_items) {
  Require(num_users >= 0 && num_items >= 0, ErrorCode::kInvalidArgument,
          "InteractionMatrix: negative dimensions");
  for (const auto& [u, i] : pairs) {
    Require(u >= 0 && u < num_users && i >= 0 && i < num_items,
            ErrorCode::kInvalidArgument,
            "InteractionMatrix: pair (" + std::to_string(u) + "," +
                std::to_string(i) + ") out of range");
  }
  std::sort(pairs.begin(), pairs.end());
  Require(std::adjacent_find(pairs.begin(), pairs.end()) == pairs.end(),
          ErrorCode::kInvalidArgument, "InteractionMatrix: duplicate pair");

  row_offsets_.assign(static_cast<std::size_t>(num_users) + 1, 0);
  col_offsets_.assign(static_cast<std::size_t>(num_items) + 1, 0);
  row_items_.resize(pairs.size());
  col_users_.resize(pairs.size());
  for (const auto& [u, i] : pairs) {
    ++row_offsets_[u + 1];
    ++col_offsets_[i + 1];
  }
  std::partial_sum(row_offsets_.begin(), row_offsets_.end(),
                   row_offsets_.begin());
  std::partial_sum(col_offsets_.begin(), col_offsets_.end(),
                   col_offsets_.begin());
  // Pairs are sorted by (user, item), so both fills come out sorted.
  std::vector<std::size_t> col_fill(col_offsets_.begin(),
                                    col_offsets_.end() - 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [u, i] = pairs[k];
    row_items_[k] = i;
    col_users_[col_fill[i]++] = u;
  }
}

bool InteractionMatrix::contains(Index user, Index item) const {
  const IndexList r = row(user);
  return std::binary_search(r.begin(), r.end(), item);
}

std::pair<IdMaps, SplitDataset> BuildSplit(const RatingLog& input) {
  RatingLog log = input;
  DeduplicateLatest(log);

  std::unordered_map<std::string, int> per_user;
  for (const auto& rec : log.records) ++per_user[rec.user];

  IdMaps ids;
  SplitDataset split;
  std::unordered_map<std::string, bool> counted_drop;
  for (const auto& rec : log.records) {
    if (per_user[rec.user] < 2) {
      if (counted_drop.emplace(rec.user, true).second) ++split.dropped_users;
      continue;
    }
    if (ids.user_index.emplace(rec.user, ids.user_tokens.size()).second) {
      ids.user_tokens.push_back(rec.user);
    }
    if (ids.item_index.emplace(rec.item, ids.item_tokens.size()).second) {
      ids.item_tokens.push_back(rec.item);
    }
  }
  Require(!ids.user_tokens.empty(), ErrorCode::kInvalidArgument,
          "BuildSplit: no user has at least two interactions");

  const auto num_users = static_cast<Index>(ids.user_tokens.size());
  const auto num_items = static_cast<Index>(ids.item_tokens.size());
  std::vector<std::vector<Interaction>> by_user(num_users);
  for (const auto& rec : log.records) {
    auto it = ids.user_index.find(rec.user);
    if (it == ids.user_index.end()) continue;
    by_user[it->second].push_back(
        {it->second, ids.item_index.at(rec.item), rec.timestamp});
  }

  split.test.resize(num_users);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index u = 0; u < num_users; ++u) {
    auto& rows = by_user[u];
    const auto latest = std::max_element(
        rows.begin(), rows.end(), [](const Interaction& a, const Interaction& b) {
          if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
          return a.item < b.item;
        });
    split.test[u] = *latest;
    rows.erase(latest);
    std::sort(rows.begin(), rows.end(),
              [](const Interaction& a, const Interaction& b) {
                return a.item < b.item;
              });
    for (const auto& r : rows) {
      split.train_records.push_back(r);
      pairs.emplace_back(r.user, r.item);
    }
  }
  split.train = InteractionMatrix(num_users, num_items, std::move(pairs));
  return {std::move(ids), std::move(split)};
}

Index SampleUnobserved(const InteractionMatrix& train, Index user, Rng& rng) {
  const IndexList row = train.row(user);
  const Index n = train.num_items();
  const auto observed = static_cast<Index>(row.size());
  Require(observed < n, ErrorCode::kInvalidArgument,
          "SampleUnobserved: user " + std::to_string(user) +
              " has no unobserved items");
  if (observed < n / 2) {
    std::uniform_int_distribution<Index> dist(0, n - 1);
    while (true) {
      const Index candidate = dist(rng);
      if (!std::binary_search(row.begin(), row.end(), candidate)) {
        return candidate;
      }
    }
  }
  // Dense row: pick the k-th unobserved item directly.
  std::uniform_int_distribution<Index> dist(0, n - observed - 1);
  Index item = dist(rng);
  for (Index j : row) {
    if (j <= item) ++item;
    else break;
  }
  return item;
}

EpochBatchSet SampleTrainNegatives(const InteractionMatrix& train, int ratio,
                                   Rng& rng) {
  Require(ratio >= 0, ErrorCode::kInvalidArgument,
          "negative ratio must be non-negative");
  EpochBatchSet set;
  set.instances.reserve(train.nnz() * (1 + static_cast<std::size_t>(ratio)));
  for (Index u = 0; u < train.num_users(); ++u) {
    const IndexList row = train.row(u);
    const bool saturated =
        static_cast<Index>(row.size()) >= train.num_items() && !row.empty();
    if (saturated && ratio > 0) ++set.saturated_users;
    for (Index i : row) {
      set.instances.push_back({u, i, 1.0});
      ++set.positives;
      if (saturated) continue;
      for (int r = 0; r < ratio; ++r) {
        set.instances.push_back({u, SampleUnobserved(train, u, rng), 0.0});
        ++set.negatives;
      }
    }
  }
  return set;
}

std::vector<TestCase> SampleTestNegatives(const SplitDataset& split,
                                          int count, Rng& rng) {
  Require(count >= 1, ErrorCode::kInvalidArgument,
          "test negative count must be >= 1");
  const Index n = split.num_items();
  std::vector<TestCase> cases;
  cases.reserve(split.test.size());
  for (const auto& held_out : split.test) {
    const IndexList row = split.train.row(held_out.user);
    auto excluded = [&](Index j) {
      return j == held_out.item ||
             std::binary_search(row.begin(), row.end(), j);
    };
    const auto available =
        static_cast<std::int64_t>(n) - static_cast<std::int64_t>(row.size()) - 1;
    Require(available >= count, ErrorCode::kInvalidArgument,
            "user " + std::to_string(held_out.user) + " has only " +
                std::to_string(available) + " unobserved items, need " +
                std::to_string(count));
    TestCase tc{held_out.user, held_out.item, {}};
    tc.negatives.reserve(count);
    if (available <= 2 * static_cast<std::int64_t>(count)) {
      std::vector<Index> pool;
      for (Index j = 0; j < n; ++j) {
        if (!excluded(j)) pool.push_back(j);
      }
      for (int k = 0; k < count; ++k) {
        std::uniform_int_distribution<std::size_t> dist(k, pool.size() - 1);
        std::swap(pool[k], pool[dist(rng)]);
        tc.negatives.push_back(pool[k]);
      }
    } else {
      std::uniform_int_distribution<Index> dist(0, n - 1);
      while (static_cast<int>(tc.negatives.size()) < count) {
        const Index j = dist(rng);
        if (excluded(j)) continue;
        if (std::find(tc.negatives.begin(), tc.negatives.end(), j) !=
            tc.negatives.end()) {
          continue;
        }
        tc.negatives.push_back(j);
      }
    }
    cases.push_back(std::move(tc));
  }
  return cases;
}

DatasetStats ComputeStats(const SplitDataset& split) {
  DatasetStats stats;
  stats.users = split.num_users();
  stats.items = split.num_items();
  stats.train_nnz = split.train.nnz();
  stats.ratings = stats.train_nnz + split.test.size();
  stats.dropped_users = split.dropped_users;
  const double cells = static_cast<double>(stats.users) *
                       static_cast<double>(stats.items);
  stats.sparsity =
      cells > 0 ? 1.0 - static_cast<double>(stats.ratings) / cells : 0.0;
  return stats;
}

void WriteStats(const std::string& path, const DatasetStats& stats) {
  std::ofstream out = OpenOut(path);
  char sparsity[64];
  std::snprintf(sparsity, sizeof(sparsity), "%.4f", stats.sparsity);
  char sparsity_full[64];
  std::snprintf(sparsity_full, sizeof(sparsity_full), "%.10f", stats.sparsity);
  out << "users\t" << stats.users << '\n'
      << "items\t" << stats.items << '\n'
      << "ratings\t" << stats.ratings << '\n'
      << "sparsity\t" << sparsity << '\n'
      << "sparsity_full\t" << sparsity_full << '\n'
      << "train_nonzeros\t" << stats.train_nnz << '\n'
      << "dropped_users\t" << stats.dropped_users << '\n';
  Require(out.good(), ErrorCode::kIo, "write failed: " + path);
}

void WriteCanonical(const std::string& prefix, const SplitDataset& split,
                    const std::vector<TestCase>& test_cases) {
  {
    std::ofstream out = OpenOut(prefix + ".train.rating");
    for (const auto& r : split.train_records) {
      out << r.user << '\t' << r.item << "\t1\t" << r.timestamp << '\n';
    }
    Require(out.good(), ErrorCode::kIo, "write failed: " + prefix);
  }
  {
    std::ofstream out = OpenOut(prefix + ".test.rating");
    for (const auto& r : split.test) {
      out << r.user << '\t' << r.item << "\t1\t" << r.timestamp << '\n';
    }
    Require(out.good(), ErrorCode::kIo, "write failed: " + prefix);
  }
  {
    std::ofstream out = OpenOut(prefix + ".test.negative");
    for (const auto& tc : test_cases) {
      out << '(' << tc.user << ',' << tc.positive_item << ')';
      for (Index j : tc.negatives) out << '\t' << j;
      out << '\n';
    }
    Require(out.good(), ErrorCode::kIo, "write failed: " + prefix);
  }
}

namespace {

std::vector<Interaction> ReadRatingFile(const std::string& path) {
  std::ifstream in = OpenIn(path);
  std::vector<Interaction> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = Trim(line);
    if (view.empty()) continue;
    const auto fields = Split(view, "\t");
    if (fields.size() < 3) ParseFail(path, line_no, "expected >= 3 fields");
    Interaction r;
    double rating = 0.0;
    if (!ParseNumber(fields[0], r.user) || !ParseNumber(fields[1], r.item) ||
        !ParseNumber(fields[2], rating) || r.user < 0 || r.item < 0) {
      ParseFail(path, line_no, "bad user/item/rating field");
    }
    if (fields.size() >= 4 && !ParseNumber(fields[3], r.timestamp)) {
      ParseFail(path, line_no, "bad timestamp");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

CanonicalDataset ReadCanonical(const std::string& prefix) {
  CanonicalDataset ds;
  auto train_rows = ReadRatingFile(prefix + ".train.rating");
  auto test_rows = ReadRatingFile(prefix + ".test.rating");

  const std::string neg_path = prefix + ".test.negative";
  std::ifstream in = OpenIn(neg_path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_negatives = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = Trim(line);
    if (view.empty()) continue;
    const auto fields = Split(view, "\t");
    const std::string_view head = Trim(fields[0]);
    if (head.size() < 5 || head.front() != '(' || head.back() != ')') {
      ParseFail(neg_path, line_no, "field 0 must be (user,item)");
    }
    const auto ui = Split(head.substr(1, head.size() - 2), ",");
    TestCase tc;
    if (ui.size() != 2 || !ParseNumber(ui[0], tc.user) ||
        !ParseNumber(ui[1], tc.positive_item)) {
      ParseFail(neg_path, line_no, "field 0 must be (user,item)");
    }
    if (fields.size() < 2) ParseFail(neg_path, line_no, "no negatives");
    if (expected_negatives == 0) expected_negatives = fields.size() - 1;
    if (fields.size() - 1 != expected_negatives) {
      ParseFail(neg_path, line_no,
                "expected " + std::to_string(expected_negatives) +
                    " negatives, got " + std::to_string(fields.size() - 1));
    }
    for (std::size_t f = 1; f < fields.size(); ++f) {
      Index j = 0;
      if (!ParseNumber(fields[f], j) || j < 0) {
        ParseFail(neg_path, line_no, "bad negative item index");
      }
      tc.negatives.push_back(j);
    }
    ds.test_cases.push_back(std::move(tc));
  }

  Index max_user = -1;
  Index max_item = -1;
  for (const auto* rows : {&train_rows, &test_rows}) {
    for (const auto& r : *rows) {
      max_user = std::max(max_user, r.user);
      max_item = std::max(max_item, r.item);
    }
  }
  for (const auto& tc : ds.test_cases) {
    max_user = std::max(max_user, tc.user);
    max_item = std::max(max_item, tc.positive_item);
    for (Index j : tc.negatives) max_item = std::max(max_item, j);
  }
  Require(max_user >= 0, ErrorCode::kParse, prefix + ": empty dataset");
  const Index num_users = max_user + 1;
  const Index num_items = max_item + 1;

  std::sort(train_rows.begin(), train_rows.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.item) < std::tie(b.user, b.item);
            });
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(train_rows.size());
  for (const auto& r : train_rows) pairs.emplace_back(r.user, r.item);
  ds.split.train = InteractionMatrix(num_users, num_items, std::move(pairs));
  ds.split.train_records = std::move(train_rows);

  ds.split.test.assign(num_users, Interaction{-1, -1, 0});
  for (const auto& r : test_rows) {
    Require(ds.split.test[r.user].user < 0, ErrorCode::kParse,
            prefix + ".test.rating: user " + std::to_string(r.user) +
                " appears twice");
    ds.split.test[r.user] = r;
  }
  for (Index u = 0; u < num_users; ++u) {
    Require(ds.split.test[u].user == u, ErrorCode::kParse,
            prefix + ".test.rating: no held-out item for user " +
                std::to_string(u));
    Require(!ds.split.train.contains(u, ds.split.test[u].item),
            ErrorCode::kParse,
            prefix + ": test positive of user " + std::to_string(u) +
                " also appears in train");
  }
  for (const auto& tc : ds.test_cases) {
    Require(ds.split.test[tc.user].item == tc.positive_item, ErrorCode::kParse,
            neg_path + ": positive of user " + std::to_string(tc.user) +
                " disagrees with .test.rating");
    for (Index j : tc.negatives) {
      Require(j != tc.positive_item && !ds.split.train.contains(tc.user, j),
              ErrorCode::kParse,
              neg_path + ": negative " + std::to_string(j) + " of user " +
                  std::to_string(tc.user) + " is an observed item");
    }
  }
  return ds;
}

}  // namespace cfnet
