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

#include "cfnet/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "cfnet/error.hpp"

#ifndef CFNET_VERSION_STRING
#define CFNET_VERSION_STRING "unknown"
#endif

namespace cfnet {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kTestNegativeStream = 3;

std::string Join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  Require(!ec && fs::is_directory(dir), ErrorCode::kIo,
          "cannot create output directory " + dir);
}

void RequireFile(const std::string& path, const std::string& what) {
  Require(!path.empty(), ErrorCode::kInvalidArgument, what + " is not set");
  Require(fs::is_regular_file(path), ErrorCode::kInvalidArgument,
          what + " not found: " + path);
}

void RequireDataset(const std::string& prefix) {
  Require(!prefix.empty(), ErrorCode::kInvalidArgument, "dataset is not set");
  for (const char* ext : {".train.rating", ".test.rating", ".test.negative"}) {
    RequireFile(prefix + ext, "dataset file");
  }
}

std::string DatasetName(const std::string& prefix) {
  return fs::path(prefix).filename().string();
}

bool UseFilter(const RunConfig& config, RatingFormat format) {
  const std::string f = config.Get("filter");
  if (f == "auto") return format == RatingFormat::kTabSeparated;
  if (f == "on" || f == "true") return true;
  if (f == "off" || f == "false") return false;
  Fail(ErrorCode::kInvalidArgument,
       "filter must be on, off or auto, got '" + f + "'");
}

// A variant name as accepted on the command line.
struct VariantChoice {
  std::string name;
  Variant variant = Variant::kFused;
  bool pretrained = false;
};

VariantChoice ParseVariantChoice(const std::string& name) {
  if (name == "fused-scratch") return {name, Variant::kFused, false};
  const Variant v = ParseVariant(name);
  return {name, v, v == Variant::kFused};
}

void CheckPretrained(const ModelParams& p, Variant want, const std::string& path,
                     const InteractionMatrix& train) {
  Require(p.arch.variant == want, ErrorCode::kInvalidArgument,
          path + " holds a " + VariantName(p.arch.variant) +
              " model, expected " + VariantName(want));
  Require(p.arch.num_users == train.num_users() &&
              p.arch.num_items == train.num_items(),
          ErrorCode::kShape,
          path + " was trained on a dataset of a different size");
}

struct TrainContext {
  const RunConfig* config;
  const CanonicalDataset* data;
  std::string dataset_name;
  std::string out_dir;
};

TrainSummary FinishRun(const TrainContext& ctx, const std::string& name,
                       const TrainResult& result, const TrainConfig& tc) {
  TrainSummary s;
  s.variant = name;
  s.history = result.history;
  s.checkpoint = Join(ctx.out_dir, name + ".ckpt");
  SaveCheckpoint(result.best, s.checkpoint);
  WriteTrainLog(Join(ctx.out_dir, name + ".log"), result.history);
  WriteTimingLog(Join(ctx.out_dir, name + ".timing"), result.history);
  s.report = Evaluate(ModelScorer(result.best, ctx.data->split.train, name),
                      ctx.data->test_cases, tc.top_k);
  s.report.dataset = ctx.dataset_name;
  s.report.seed = tc.seed;
  WriteEvalReport(Join(ctx.out_dir, name + ".report"), s.report);
  WriteManifest(Join(ctx.out_dir, "train-" + name + ".manifest"), "train",
                *ctx.config);
  return s;
}

TrainSummary TrainScratch(const TrainContext& ctx, const VariantChoice& choice,
                          const TrainConfig& tc) {
  const auto& train = ctx.data->split.train;
  const ArchSpec arch = DefaultArch(choice.variant, train.num_users(),
                                    train.num_items(),
                                    ctx.config->GetInt("factors"));
  const TrainResult result =
      TrainFromScratch(arch, train, ctx.data->test_cases, tc);
  return FinishRun(ctx, choice.name, result, tc);
}

TrainSummary TrainFused(const TrainContext& ctx, const ModelParams& rl,
                        const ModelParams& ml, const TrainConfig& tc) {
  const double alpha = ctx.config->GetDouble("alpha");
  const TrainResult result = FineTuneFused(rl, ml, ctx.data->split.train,
                                           ctx.data->test_cases, tc, alpha);
  return FinishRun(ctx, "fused", result, tc);
}

void ValidateCommon(const RunConfig& config) {
  Require(config.GetInt("factors") >= 1, ErrorCode::kInvalidArgument,
          "factors must be >= 1");
  const double alpha = config.GetDouble("alpha");
  Require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in [0, 1]");
  ToTrainConfig(config);
}

std::string PretrainedPath(const RunConfig& config, const std::string& key,
                           const std::string& fallback) {
  const std::string p = config.Get(key);
  return p.empty() ? Join(config.Get("out"), fallback) : p;
}

}  // namespace

const char* CodeVersion() { return CFNET_VERSION_STRING; }

void WriteManifest(const std::string& path, const std::string& command,
                   const RunConfig& config) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  out << "command\t" << command << '\n'
      << "version\t" << CodeVersion() << '\n';
  for (const auto& [key, value] : config.Resolved()) {
    out << key << '\t' << value << '\n';
  }
  Require(out.good(), ErrorCode::kIo, "write failed: " + path);
}

PrepareResult Prepare(const RunConfig& config) {
  const std::string raw = config.Get("raw");
  RequireFile(raw, "raw rating file");
  const RatingFormat format = ParseRatingFormat(config.Get("format"));
  const bool filter = UseFilter(config, format);
  const int min_user = config.GetInt("min-user");
  const int min_item = config.GetInt("min-item");
  const int negatives = config.GetInt("test-negatives");
  Require(min_user >= 1 && min_item >= 1, ErrorCode::kInvalidArgument,
          "min-user and min-item must be >= 1");
  Require(negatives >= 1, ErrorCode::kInvalidArgument,
          "test-negatives must be >= 1");
  const std::string name = config.Get("name");
  Require(!name.empty() && name.find('/') == std::string::npos,
          ErrorCode::kInvalidArgument, "name must be a plain file name");
  const std::uint64_t seed = config.GetUint64("seed");
  const std::string out_dir = config.Get("out");

  RatingLog log = LoadRatings(raw, format);
  if (filter) log = FilterKCore(log, min_user, min_item);
  auto [ids, split] = BuildSplit(log);
  Rng rng = DerivedRng(seed, kTestNegativeStream);
  const std::vector<TestCase> cases = SampleTestNegatives(split, negatives, rng);

  EnsureDir(out_dir);
  PrepareResult result;
  result.prefix = Join(out_dir, name);
  result.stats = ComputeStats(split);
  WriteCanonical(result.prefix, split, cases);
  WriteStats(result.prefix + ".stats", result.stats);
  WriteManifest(Join(out_dir, "prepare-" + name + ".manifest"), "prepare",
                config);
  return result;
}

TrainSummary Train(const RunConfig& config) {
  const std::string prefix = config.Get("dataset");
  RequireDataset(prefix);
  const VariantChoice choice = ParseVariantChoice(config.Get("variant"));
  ValidateCommon(config);
  std::string rl_path;
  std::string ml_path;
  if (choice.pretrained) {
    rl_path = PretrainedPath(config, "rl-checkpoint", "rl.ckpt");
    ml_path = PretrainedPath(config, "ml-checkpoint", "ml.ckpt");
    RequireFile(rl_path, "rl checkpoint");
    RequireFile(ml_path, "ml checkpoint");
  }
  const TrainConfig tc = ToTrainConfig(config);

  const CanonicalDataset data = ReadCanonical(prefix);
  const std::string out_dir = config.Get("out");
  EnsureDir(out_dir);
  const TrainContext ctx{&config, &data, DatasetName(prefix), out_dir};
  if (!choice.pretrained) return TrainScratch(ctx, choice, tc);

  const ModelParams rl = LoadCheckpoint(rl_path);
  const ModelParams ml = LoadCheckpoint(ml_path);
  CheckPretrained(rl, Variant::kRl, rl_path, data.split.train);
  CheckPretrained(ml, Variant::kMl, ml_path, data.split.train);
  return TrainFused(ctx, rl, ml, tc);
}

EvalReport EvaluateCommand(const RunConfig& config) {
  const std::string prefix = config.Get("dataset");
  RequireDataset(prefix);
  const bool itempop = config.GetBool("itempop");
  const std::string ckpt = config.Get("checkpoint");
  if (!itempop) RequireFile(ckpt, "checkpoint");
  const int k = config.GetInt("k");
  Require(k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1");

  const CanonicalDataset data = ReadCanonical(prefix);
  EvalReport report;
  if (itempop) {
    report = Evaluate(ItemPopScorer(data.split.train), data.test_cases, k);
  } else {
    const ModelParams params = LoadCheckpoint(ckpt);
    report = Evaluate(ModelScorer(params, data.split.train), data.test_cases, k);
  }
  report.dataset = DatasetName(prefix);
  report.seed = config.GetUint64("seed");
  const std::string out_dir = config.Get("out");
  EnsureDir(out_dir);
  WriteEvalReport(Join(out_dir, "eval-" + report.model_id + ".report"),
                  report);
  WriteManifest(Join(out_dir, "evaluate-" + report.model_id + ".manifest"),
                "evaluate", config);
  return report;
}

std::vector<SweepCell> Sweep(const RunConfig& config) {
  const std::string prefix = config.Get("dataset");
  RequireDataset(prefix);
  std::string axis = config.Get("axis");
  if (axis == "negative_ratio") axis = "neg-ratio";
  if (axis == "predictive_dim") axis = "factors";
  Require(axis == "neg-ratio" || axis == "factors",
          ErrorCode::kInvalidArgument,
          "axis must be neg-ratio (negative_ratio) or factors (predictive_dim)"
          ", got '" + axis + "'");
  const std::vector<std::string> values = config.GetList("values");
  Require(!values.empty(), ErrorCode::kInvalidArgument,
          "sweep needs at least one value");
  const VariantChoice choice = ParseVariantChoice(config.Get("variant"));
  ValidateCommon(config);
  Require(config.GetInt("pretrain-epochs") >= 0 &&
              config.GetDouble("pretrain-lr") >= 0.0,
          ErrorCode::kInvalidArgument,
          "pretrain-epochs and pretrain-lr must be >= 0");

  const CanonicalDataset data = ReadCanonical(prefix);
  const std::string out_dir = config.Get("out");
  EnsureDir(out_dir);

  std::vector<SweepCell> cells;
  for (const std::string& value : values) {
    SweepCell cell;
    cell.value = value;
    try {
      RunConfig cell_config = config;
      cell_config.SetOverride(axis, value);
      const std::string cell_dir = Join(out_dir, axis + "-" + value);
      cell_config.SetOverride("out", cell_dir);
      ValidateCommon(cell_config);
      EnsureDir(cell_dir);
      const TrainContext ctx{&cell_config, &data, DatasetName(prefix),
                             cell_dir};
      const TrainConfig tc = ToTrainConfig(cell_config);
      TrainSummary summary;
      if (choice.pretrained) {
        TrainConfig pre = tc;
        pre.epochs = cell_config.GetInt("pretrain-epochs");
        pre.learning_rate = cell_config.GetDouble("pretrain-lr");
        const TrainSummary rl =
            TrainScratch(ctx, {"rl", Variant::kRl, false}, pre);
        const TrainSummary ml =
            TrainScratch(ctx, {"ml", Variant::kMl, false}, pre);
        summary = TrainFused(ctx, LoadCheckpoint(rl.checkpoint),
                             LoadCheckpoint(ml.checkpoint), tc);
      } else {
        summary = TrainScratch(ctx, choice, tc);
      }
      cell.ok = true;
      cell.hit_ratio = summary.report.hit_ratio;
      cell.ndcg = summary.report.ndcg;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    cells.push_back(cell);
  }

  std::ofstream table(Join(out_dir, "sweep-" + axis + ".tsv"),
                      std::ios::binary | std::ios::trunc);
  std::ofstream series(Join(out_dir, "sweep-" + axis + ".series"),
                       std::ios::binary | std::ios::trunc);
  Require(table.good() && series.good(), ErrorCode::kIo,
          "cannot write sweep output in " + out_dir);
  table << axis << "\thr\tndcg\tstatus\n";
  series << "# " << axis << " hr ndcg\n";
  char buf[96];
  for (const SweepCell& c : cells) {
    if (c.ok) {
      std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f", c.hit_ratio, c.ndcg);
      table << c.value << buf << "\tok\n";
      std::snprintf(buf, sizeof(buf), " %.6f %.6f\n", c.hit_ratio, c.ndcg);
      series << c.value << buf;
    } else {
      std::string msg = c.error;
      for (char& ch : msg) {
        if (ch == '\t' || ch == '\n') ch = ' ';
      }
      table << c.value << "\t-\t-\tfailed: " << msg << '\n';
    }
  }
  WriteManifest(Join(out_dir, "sweep-" + axis + ".manifest"), "sweep", config);
  return cells;
}

}  // namespace cfnet
