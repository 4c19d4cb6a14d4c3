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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfnet/training.hpp"

namespace cfnet {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognised key. Names match the command-line flags without "--".
const std::vector<ConfigKey>& ConfigKeys();

// Layered key/value configuration. A value set on the command line wins
// over one from a config file, which wins over the built-in default,
// regardless of the order in which the layers were filled.
class RunConfig {
 public:
  RunConfig() = default;

  // Flat "key = value" lines; '#' starts a comment. Unknown keys and
  // malformed lines are rejected with their line number.
  void LoadFile(const std::string& path);
  void LoadText(const std::string& text, const std::string& source);

  void SetFileValue(const std::string& key, const std::string& value);
  void SetOverride(const std::string& key, const std::string& value);

  std::string Get(const std::string& key) const;
  bool IsSet(const std::string& key) const;  // not just the default
  int GetInt(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  std::uint64_t GetUint64(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::vector<std::string> GetList(const std::string& key) const;

  // Resolved value of every key, sorted by key.
  std::map<std::string, std::string> Resolved() const;

 private:
  std::map<std::string, std::string> file_;
  std::map<std::string, std::string> overrides_;
};

TrainConfig ToTrainConfig(const RunConfig& config);

}  // namespace cfnet
