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

#include "cfnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cfnet/error.hpp"

namespace cfnet {
namespace {

std::string Strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

const ConfigKey* FindKey(const std::string& name) {
  for (const auto& k : ConfigKeys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void CheckKnown(const std::string& key) {
  Require(FindKey(key) != nullptr, ErrorCode::kInvalidArgument,
          "unknown configuration key '" + key + "'");
}

template <typename T>
T ParseAs(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  Require(ec == std::errc() && ptr == end && !text.empty(),
          ErrorCode::kInvalidArgument,
          "configuration key '" + key + "': cannot parse '" + text + "'");
  return value;
}

}  // namespace

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = {
      {"alpha", "0.5", "fusion weight given to the rl output layer"},
      {"axis", "neg-ratio", "sweep axis: neg-ratio or factors"},
      {"batch-size", "256", "mini-batch size"},
      {"beta1", "0.9", "Adam first-moment decay"},
      {"beta2", "0.999", "Adam second-moment decay"},
      {"checkpoint", "", "checkpoint to evaluate"},
      {"config", "", "key = value configuration file"},
      {"dataset", "", "canonical dataset prefix, e.g. out/lastfm"},
      {"epochs", "20", "training epochs"},
      {"epsilon", "1e-8", "Adam epsilon"},
      {"eval-every", "1", "evaluate every N epochs (0 = never)"},
      {"factors", "64", "predictive vector dimension"},
      {"filter", "auto", "k-core filtering: on, off, auto (off for ml-1m)"},
      {"format", "double_colon", "raw format: double_colon or tsv"},
      {"init-std", "0.01", "stddev of the Gaussian initialization"},
      {"itempop", "false", "evaluate the ItemPop baseline"},
      {"k", "10", "ranking cut-off"},
      {"lr", "0.001", "learning rate"},
      {"min-item", "5", "k-core: minimum interactions per item"},
      {"min-user", "20", "k-core: minimum interactions per user"},
      {"ml-checkpoint", "", "pre-trained ml checkpoint for fused"},
      {"name", "data", "dataset name used for prepared files"},
      {"neg-ratio", "4", "sampled negatives per positive"},
      {"out", ".", "output directory"},
      {"patience", "0", "early-stop after N evaluations without gain"},
      {"pretrain-epochs", "20", "epochs for rl/ml pre-training in sweeps"},
      {"pretrain-lr", "0.001", "Adam learning rate for pre-training"},
      {"raw", "", "raw rating file for prepare"},
      {"resample", "epoch", "negative resampling: epoch or batch"},
      {"rl-checkpoint", "", "pre-trained rl checkpoint for fused"},
      {"seed", "2019", "master random seed"},
      {"test-negatives", "100", "sampled negatives per test user"},
      {"values", "", "comma-separated sweep values"},
      {"variant", "fused", "rl, ml, fused or fused-scratch"},
  };
  return keys;
}

void RunConfig::LoadFile(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kInvalidArgument,
          "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  LoadText(ss.str(), path);
}

void RunConfig::LoadText(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    Require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            source + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = Strip(line.substr(0, eq));
    const std::string value = Strip(line.substr(eq + 1));
    Require(FindKey(key) != nullptr, ErrorCode::kInvalidArgument,
            source + ":" + std::to_string(line_no) + ": unknown key '" + key +
                "'");
    file_[key] = value;
  }
}

void RunConfig::SetFileValue(const std::string& key, const std::string& value) {
  CheckKnown(key);
  file_[key] = value;
}

void RunConfig::SetOverride(const std::string& key, const std::string& value) {
  CheckKnown(key);
  overrides_[key] = value;
}

std::string RunConfig::Get(const std::string& key) const {
  const ConfigKey* k = FindKey(key);
  Require(k != nullptr, ErrorCode::kInvalidArgument,
          "unknown configuration key '" + key + "'");
  if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  if (auto it = file_.find(key); it != file_.end()) return it->second;
  return k->default_value;
}

bool RunConfig::IsSet(const std::string& key) const {
  return overrides_.count(key) > 0 || file_.count(key) > 0;
}

int RunConfig::GetInt(const std::string& key) const {
  return ParseAs<int>(key, Get(key));
}

double RunConfig::GetDouble(const std::string& key) const {
  return ParseAs<double>(key, Get(key));
}

std::uint64_t RunConfig::GetUint64(const std::string& key) const {
  return ParseAs<std::uint64_t>(key, Get(key));
}

bool RunConfig::GetBool(const std::string& key) const {
  const std::string v = Get(key);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no" || v.empty()) {
    return false;
  }
  Fail(ErrorCode::kInvalidArgument,
       "configuration key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> RunConfig::GetList(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(Get(key));
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = Strip(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::map<std::string, std::string> RunConfig::Resolved() const {
  std::map<std::string, std::string> out;
  for (const auto& k : ConfigKeys()) out[k.name] = Get(k.name);
  return out;
}

TrainConfig ToTrainConfig(const RunConfig& config) {
  TrainConfig tc;
  tc.batch_size = config.GetInt("batch-size");
  tc.learning_rate = config.GetDouble("lr");
  tc.epochs = config.GetInt("epochs");
  tc.negative_ratio = config.GetInt("neg-ratio");
  tc.seed = config.GetUint64("seed");
  tc.eval_every = config.GetInt("eval-every");
  tc.patience = config.GetInt("patience");
  tc.top_k = config.GetInt("k");
  tc.resample = ParseResampleMode(config.Get("resample"));
  tc.adam.beta1 = config.GetDouble("beta1");
  tc.adam.beta2 = config.GetDouble("beta2");
  tc.adam.epsilon = config.GetDouble("epsilon");
  tc.init_stddev = config.GetDouble("init-std");
  ValidateTrainConfig(tc);
  return tc;
}

}  // namespace cfnet
