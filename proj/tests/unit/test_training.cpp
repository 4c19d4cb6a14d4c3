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

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "cfnet/error.hpp"
#include "cfnet/training.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cfnet;

namespace {

const Variant kVariants[] = {Variant::kRl, Variant::kMl, Variant::kFused};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool SameParams(ModelParams& a, ModelParams& b) {
  auto ta = Tensors(a);
  auto tb = Tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t t = 0; t < ta.size(); ++t) {
    if (ta[t].data.size() != tb[t].data.size()) return false;
    if (std::memcmp(ta[t].data.data(), tb[t].data.data(),
                    ta[t].data.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

InteractionMatrix ToyMatrix(Index users, Index items, std::uint64_t seed,
                            double density = 0.4) {
  std::mt19937_64 g(seed);
  const auto inter = fixture::RandomInteractions(users, items, density, 1, g);
  std::vector<std::pair<Index, Index>> pairs;
  for (const auto& x : inter) pairs.emplace_back(x.user, x.item);
  return InteractionMatrix(users, items, pairs);
}

}  // namespace

TEST_CASE("bce loss: anchors and extended-precision oracle") {
  CHECK(BceLossFromLogit(0.0, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(std::abs(BceLoss({0.5, 0.0}, 1.0) - 0.693147) < 1e-6);
  const double saturated = BceLossFromLogit(40.0, 1.0);
  CHECK(std::isfinite(saturated));
  CHECK(saturated < 1e-15);
  CHECK(std::isfinite(BceLossFromLogit(-800.0, 1.0)));
  CHECK(std::isfinite(BceLossFromLogit(800.0, 0.0)));

  std::mt19937_64 g(103);
  std::uniform_real_distribution<double> z(-30.0, 30.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double logit = z(g);
    const double y = static_cast<double>(trial % 2);
    const long double ref = oracle::BceLongDouble(logit, y);
    CHECK(std::abs(static_cast<long double>(BceLossFromLogit(logit, y)) -
                   ref) <= 1e-12L);
  }
}

TEST_CASE("bce gradient w.r.t. the logit") {
  CHECK(BceGradLogit(1.0, 1.0) == 0.0);
  CHECK(BceGradLogit(0.25, 0.25) == 0.0);
  CHECK(BceGradLogit(0.5, 1.0) == -0.5);
  std::mt19937_64 g(107);
  std::uniform_real_distribution<double> z(-8.0, 8.0);
  for (int trial = 0; trial < 500; ++trial) {
    double logit = z(g);
    const double y = static_cast<double>(trial % 2);
    const double analytic = BceGradLogit(Sigmoid(logit), y);
    const auto numeric = CentralDifference(
        [&] { return BceLossFromLogit(logit, y); }, {&logit, 1}, 1e-5);
    CHECK(std::abs(analytic - numeric[0]) <= 1e-6);
  }
}

TEST_CASE("config validation and name parsing") {
  TrainConfig c;
  CHECK_NOTHROW(ValidateTrainConfig(c));
  c.batch_size = 0;
  CHECK_THROWS_AS(ValidateTrainConfig(c), Error);
  c = {};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(ValidateTrainConfig(c), Error);
  c = {};
  c.negative_ratio = -1;
  CHECK_THROWS_AS(ValidateTrainConfig(c), Error);
  c = {};
  c.learning_rate = 0.0;
  CHECK_NOTHROW(ValidateTrainConfig(c));
  CHECK(ParseOptimizer("sgd") == OptimizerKind::kSgd);
  CHECK(ParseOptimizer(OptimizerName(OptimizerKind::kAdam)) ==
        OptimizerKind::kAdam);
  CHECK(ParseResampleMode("batch") == ResampleMode::kPerBatch);
  CHECK_THROWS_AS(ParseResampleMode("never"), Error);
}

TEST_CASE("positives only: loss falls over the first five epochs") {
  const InteractionMatrix train = ToyMatrix(4, 6, 3);
  for (Variant v : kVariants) {
    Rng init(1);
    ModelParams p = InitModel(DefaultArch(v, 4, 6, 4), init, 0.1);
    TrainConfig c;
    c.negative_ratio = 0;
    c.batch_size = 4;
    c.learning_rate = 0.01;
    Optimizer opt(OptimizerKind::kAdam, p);
    double last = std::numeric_limits<double>::infinity();
    for (int epoch = 1; epoch <= 5; ++epoch) {
      Rng rng = DerivedRng(c.seed, 2, epoch);
      const double loss = TrainEpoch(p, train, c, opt, rng).mean_loss;
      INFO(VariantName(v), " epoch ", epoch);
      CHECK(loss < last);
      last = loss;
    }
  }
}

TEST_CASE("learning rate zero leaves parameters unchanged") {
  const InteractionMatrix train = ToyMatrix(6, 8, 5);
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    Rng init(2);
    ModelParams p = InitModel(DefaultArch(Variant::kFused, 6, 8, 4), init);
    ModelParams before = p;
    TrainConfig c;
    c.learning_rate = 0.0;
    c.negative_ratio = 0;
    c.batch_size = 3;
    Optimizer opt(kind, p);
    Rng r1 = DerivedRng(1, 2, 1), r2 = DerivedRng(1, 2, 2);
    const double l1 = TrainEpoch(p, train, c, opt, r1).mean_loss;
    const double l2 = TrainEpoch(p, train, c, opt, r2).mean_loss;
    CHECK(SameParams(p, before));
    CHECK(std::abs(l1 - l2) <= 1e-12);
  }
}

TEST_CASE("first-epoch loss with small init is near ln 2") {
  const InteractionMatrix train = ToyMatrix(40, 60, 7, 0.1);
  for (Variant v : kVariants) {
    Rng init(3);
    ModelParams p = InitModel(DefaultArch(v, 40, 60, 8), init, 0.01);
    TrainConfig c;
    Optimizer opt(OptimizerKind::kAdam, p);
    Rng rng(4);
    const double loss = TrainEpoch(p, train, c, opt, rng).mean_loss;
    CHECK(std::abs(loss - std::log(2.0)) < 0.05);
  }
}

TEST_CASE("full-batch SGD step equals the averaged per-instance gradient") {
  const InteractionMatrix train = ToyMatrix(5, 7, 11);
  std::mt19937_64 g(109);
  for (Variant v : kVariants) {
    Rng init(5);
    ModelParams p = InitModel(DefaultArch(v, 5, 7, 3), init, 0.3);
    ModelParams expect = p;

    // Oracle: sum single-pair gradients over every positive, divide by n.
    ModelParams sum = ZerosLike(p);
    auto sum_t = Tensors(sum);
    std::size_t n = 0;
    for (Index u = 0; u < 5; ++u) {
      for (Index i : train.row(u)) {
        const auto [pred, cache] = [&] {
          if (v == Variant::kRl) return RlForward(p, train.row(u), train.col(i));
          if (v == Variant::kMl) return MlForward(p, train.row(u), train.col(i));
          return FusedForward(p, train.row(u), train.col(i));
        }();
        ModelParams gi = ModelBackward(p, cache, pred.probability - 1.0);
        auto gi_t = Tensors(gi);
        for (std::size_t t = 0; t < sum_t.size(); ++t) {
          for (std::size_t k = 0; k < sum_t[t].data.size(); ++k) {
            sum_t[t].data[k] += gi_t[t].data[k];
          }
        }
        ++n;
      }
    }
    const double lr = 0.05;
    auto exp_t = Tensors(expect);
    for (std::size_t t = 0; t < exp_t.size(); ++t) {
      for (std::size_t k = 0; k < exp_t[t].data.size(); ++k) {
        exp_t[t].data[k] -= lr * sum_t[t].data[k] / static_cast<double>(n);
      }
    }

    TrainConfig c;
    c.negative_ratio = 0;
    c.batch_size = static_cast<int>(train.nnz());
    c.learning_rate = lr;
    Optimizer opt(OptimizerKind::kSgd, p);
    Rng rng(6);
    const EpochStats st = TrainEpoch(p, train, c, opt, rng);
    CHECK(st.batches == 1);
    auto got_t = Tensors(p);
    double worst = 0.0;
    for (std::size_t t = 0; t < got_t.size(); ++t) {
      for (std::size_t k = 0; k < got_t[t].data.size(); ++k) {
        worst = std::max(worst, std::abs(got_t[t].data[k] - exp_t[t].data[k]));
      }
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("a non-finite loss aborts naming the batch") {
  const InteractionMatrix train = ToyMatrix(4, 5, 13);
  Rng init(7);
  ModelParams p = InitModel(DefaultArch(Variant::kRl, 4, 5, 2), init);
  p.output[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c;
  Optimizer opt(OptimizerKind::kAdam, p);
  Rng rng(8);
  try {
    TrainEpoch(p, train, c, opt, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRuntime);
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}

TEST_CASE("per-batch resampling trains every positive once") {
  const InteractionMatrix train = ToyMatrix(6, 9, 17);
  Rng init(9);
  ModelParams p = InitModel(DefaultArch(Variant::kMl, 6, 9, 2), init);
  TrainConfig c;
  c.resample = ResampleMode::kPerBatch;
  c.batch_size = 10;
  c.negative_ratio = 4;
  Optimizer opt(OptimizerKind::kAdam, p);
  Rng rng(10);
  const EpochStats st = TrainEpoch(p, train, c, opt, rng);
  CHECK(st.instances == 5 * train.nnz());
  CHECK(std::isfinite(st.mean_loss));
}

namespace {

struct Toy {
  SplitDataset split;
  std::vector<TestCase> cases;
};

Toy MakeToy(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  RatingLog log = fixture::RandomRatingLog(40, 150, 25, g);
  auto [ids, split] = BuildSplit(log);
  Rng rng(seed);
  auto cases = SampleTestNegatives(split, 100, rng);
  return {std::move(split), std::move(cases)};
}

}  // namespace

TEST_CASE("history: length, best epoch, determinism") {
  const Toy toy = MakeToy(113);
  const std::string dir = fixture::TempDir("training_history");
  TrainConfig c;
  c.epochs = 3;
  c.seed = 77;
  const ArchSpec arch = DefaultArch(Variant::kRl, toy.split.num_users(),
                                    toy.split.num_items(), 4);
  const TrainResult a = TrainFromScratch(arch, toy.split.train, toy.cases, c);
  const TrainResult b = TrainFromScratch(arch, toy.split.train, toy.cases, c);
  CHECK(a.history.epochs.size() == 3);
  CHECK(a.history.initial_evaluated);
  for (const auto& e : a.history.epochs) {
    CHECK(std::isfinite(e.mean_loss));
    CHECK(e.evaluated);
  }
  double best = a.history.initial_hit_ratio;
  for (const auto& e : a.history.epochs) best = std::max(best, e.hit_ratio);
  CHECK(a.history.best_hit_ratio == best);

  WriteTrainLog(dir + "/a.log", a.history);
  WriteTrainLog(dir + "/b.log", b.history);
  CHECK(ReadFile(dir + "/a.log") == ReadFile(dir + "/b.log"));
  const std::string log = ReadFile(dir + "/a.log");
  CHECK(log.rfind("epoch\tloss\thr\tndcg\n0\t-\t", 0) == 0);
  CHECK(log.find("# best_epoch\t") != std::string::npos);
  WriteTimingLog(dir + "/a.timing", a.history);
  CHECK(ReadFile(dir + "/a.timing").rfind("epoch\tseconds\n", 0) == 0);

  // Different seed, different trajectory.
  c.seed = 78;
  const TrainResult d = TrainFromScratch(arch, toy.split.train, toy.cases, c);
  CHECK(d.history.epochs[0].mean_loss != a.history.epochs[0].mean_loss);
}

TEST_CASE("patience stops early; eval_every 0 keeps the last parameters") {
  const Toy toy = MakeToy(127);
  const ArchSpec arch = DefaultArch(Variant::kMl, toy.split.num_users(),
                                    toy.split.num_items(), 4);
  TrainConfig c;
  c.epochs = 50;
  c.patience = 1;
  c.learning_rate = 0.0;  // nothing improves
  const TrainResult r = TrainFromScratch(arch, toy.split.train, toy.cases, c);
  CHECK(r.history.epochs.size() == 1);
  CHECK(r.history.best_epoch == 0);

  c.epochs = 2;
  c.patience = 0;
  c.eval_every = 0;
  c.learning_rate = 0.001;
  TrainResult q = TrainFromScratch(arch, toy.split.train, toy.cases, c);
  CHECK(q.history.epochs.size() == 2);
  CHECK_FALSE(q.history.initial_evaluated);
  CHECK(SameParams(q.best, q.last));
}

TEST_CASE("fine-tuning starts from the fused pre-trained models") {
  const Toy toy = MakeToy(131);
  const Index m = toy.split.num_users(), n = toy.split.num_items();
  TrainConfig c;
  c.epochs = 2;
  const TrainResult rl =
      TrainFromScratch(DefaultArch(Variant::kRl, m, n, 4), toy.split.train,
                       toy.cases, c);
  const TrainResult ml =
      TrainFromScratch(DefaultArch(Variant::kMl, m, n, 4), toy.split.train,
                       toy.cases, c);
  const TrainResult fused =
      FineTuneFused(rl.best, ml.best, toy.split.train, toy.cases, c, 0.5);
  const ModelParams start = FusePretrained(rl.best, ml.best, 0.5);
  const EvalReport r0 =
      Evaluate(ModelScorer(start, toy.split.train), toy.cases, 10);
  CHECK(fused.history.initial_hit_ratio == r0.hit_ratio);
  CHECK(fused.best.arch.variant == Variant::kFused);
  CHECK(fused.history.best_hit_ratio >= r0.hit_ratio);
}

TEST_CASE("derived streams are reproducible and distinct") {
  Rng a = DerivedRng(1, 2, 3), b = DerivedRng(1, 2, 3);
  Rng c = DerivedRng(1, 2, 4), d = DerivedRng(1, 3, 3), e = DerivedRng(2, 2, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CHECK(x != e());
}
