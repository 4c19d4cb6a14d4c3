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

// cfnet command-line tool: prepare, train, evaluate, sweep.
// Exit codes: 0 success, 1 invalid arguments or configuration, 2 failure
// while running.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfnet/cfnet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Flag {
  const char* key;
  const char* help;
};

const std::vector<Flag> kPrepareFlags = {
    {"raw", "raw rating file"},
    {"format", "double_colon (ml-1m) or tsv (lastfm)"},
    {"name", "dataset name; files are <out>/<name>.*"},
    {"filter", "k-core filter: on, off or auto"},
    {"min-user", "k-core minimum interactions per user"},
    {"min-item", "k-core minimum interactions per item"},
    {"test-negatives", "negatives per test user"},
    {"seed", "random seed"},
    {"out", "output directory"},
};

const std::vector<Flag> kTrainFlags = {
    {"dataset", "prepared dataset prefix, e.g. out/lastfm"},
    {"variant", "rl, ml, fused or fused-scratch"},
    {"factors", "predictive factors"},
    {"neg-ratio", "negatives per positive"},
    {"epochs", "training epochs"},
    {"lr", "learning rate"},
    {"batch-size", "mini-batch size"},
    {"seed", "random seed"},
    {"out", "output directory"},
    {"k", "ranking cut-off"},
    {"alpha", "fusion weight of the rl output layer"},
    {"rl-checkpoint", "pre-trained rl checkpoint (fused)"},
    {"ml-checkpoint", "pre-trained ml checkpoint (fused)"},
    {"eval-every", "evaluate every N epochs, 0 disables"},
    {"patience", "early stopping patience in evaluations"},
    {"resample", "negative resampling: epoch or batch"},
    {"init-std", "Gaussian init stddev"},
    {"beta1", "Adam beta1"},
    {"beta2", "Adam beta2"},
    {"epsilon", "Adam epsilon"},
};

const std::vector<Flag> kEvaluateFlags = {
    {"dataset", "prepared dataset prefix"},
    {"checkpoint", "model checkpoint"},
    {"k", "ranking cut-off"},
    {"seed", "seed recorded in the report"},
    {"out", "output directory"},
};

std::vector<Flag> SweepFlags() {
  std::vector<Flag> flags = kTrainFlags;
  flags.push_back({"axis", "neg-ratio or factors"});
  flags.push_back({"values", "comma-separated values"});
  flags.push_back({"pretrain-epochs", "rl/ml pre-training epochs (fused)"});
  flags.push_back({"pretrain-lr", "rl/ml pre-training learning rate"});
  return flags;
}

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::string config_file;
  bool itempop = false;
};

void AddFlags(Command& cmd, const std::vector<Flag>& flags) {
  cmd.app->add_option("--config", cmd.config_file,
                      "key = value file; flags take precedence");
  for (const Flag& f : flags) {
    cmd.app->add_option(std::string("--") + f.key, cmd.values[f.key], f.help);
  }
}

int ExitFor(cfnet_status status) {
  if (status == CFNET_OK) return kExitOk;
  return status == CFNET_ERR_INVALID_ARGUMENT ? kExitValidation
                                              : kExitRuntime;
}

int Report(cfnet_status status) {
  if (status != CFNET_OK) {
    std::fprintf(stderr, "cfnet: %s: %s\n", cfnet_status_name(status),
                 cfnet_last_error());
  }
  return ExitFor(status);
}

void PrintSummary(const cfnet_eval_summary& s) {
  std::printf("HR@%d\t%.4f\nNDCG@%d\t%.4f\nusers\t%lld\n", s.k, s.hit_ratio,
              s.k, s.ndcg, static_cast<long long>(s.users));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfnet: collaborative filtering networks for implicit feedback"};
  app.set_version_flag("--version", std::string(cfnet_version()));
  app.require_subcommand(1);

  Command prepare, train, evaluate, sweep;
  prepare.app = app.add_subcommand("prepare", "build a leave-one-out split");
  train.app = app.add_subcommand("train", "train one model variant");
  evaluate.app = app.add_subcommand("evaluate", "HR@K and NDCG@K of a model");
  sweep.app = app.add_subcommand("sweep", "train over a grid of one setting");
  AddFlags(prepare, kPrepareFlags);
  AddFlags(train, kTrainFlags);
  AddFlags(evaluate, kEvaluateFlags);
  evaluate.app->add_flag("--itempop", evaluate.itempop,
                         "evaluate the popularity baseline");
  AddFlags(sweep, SweepFlags());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  Command* cmd = nullptr;
  for (Command* c : {&prepare, &train, &evaluate, &sweep}) {
    if (c->app->parsed()) cmd = c;
  }

  cfnet_config* raw_config = nullptr;
  if (cfnet_config_create(&raw_config) != CFNET_OK) {
    return Report(CFNET_ERR_RUNTIME);
  }
  std::unique_ptr<cfnet_config, decltype(&cfnet_config_destroy)> config(
      raw_config, cfnet_config_destroy);

  cfnet_status status = CFNET_OK;
  if (!cmd->config_file.empty()) {
    status = cfnet_config_load_file(config.get(), cmd->config_file.c_str());
    if (status != CFNET_OK) return Report(status);
  }
  for (const auto& [key, value] : cmd->values) {
    if (cmd->app->count("--" + key) == 0) continue;
    status = cfnet_config_set(config.get(), key.c_str(), value.c_str());
    if (status != CFNET_OK) return Report(status);
  }
  if (cmd->itempop) {
    status = cfnet_config_set(config.get(), "itempop", "true");
    if (status != CFNET_OK) return Report(status);
  }

  cfnet_eval_summary summary{};
  if (cmd == &prepare) {
    status = cfnet_prepare(config.get());
  } else if (cmd == &train) {
    status = cfnet_train(config.get(), &summary);
    if (status == CFNET_OK) PrintSummary(summary);
  } else if (cmd == &evaluate) {
    status = cfnet_evaluate(config.get(), &summary);
    if (status == CFNET_OK) PrintSummary(summary);
  } else {
    size_t cells = 0;
    size_t failed = 0;
    status = cfnet_sweep(config.get(), &cells, &failed);
    if (status == CFNET_OK) {
      std::printf("cells\t%zu\nfailed\t%zu\n", cells, failed);
      if (failed > 0) {
        std::fprintf(stderr, "cfnet: %zu of %zu sweep cells failed\n", failed,
                     cells);
      }
      if (cells > 0 && failed == cells) return kExitRuntime;
    }
  }
  return Report(status);
}
