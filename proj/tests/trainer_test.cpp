// Copyright 2026 The kdalign Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "kdalign/checkpoint.hpp"
#include "kdalign/config.hpp"
#include "kdalign/dataset.hpp"
#include "kdalign/error.hpp"
#include "kdalign/trainer.hpp"
#include "test_support.hpp"

namespace kdalign {
namespace {

using testing::slurp;
using testing::TempDir;
using testing::thrown_code;

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Dataset make_data(const TempDir& dir, SyntheticSpec spec) {
  generate_synthetic(spec, dir.path());
  return load_dataset(dir / "manifest.json");
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_concepts = 128;
  s.seed = 3;
  return s;
}

TrainConfig drfd_config() {
  TrainConfig cfg;
  cfg.weights[Objective::kDR] = 1.0;
  cfg.weights[Objective::kFD] = 0.5;
  cfg.queue_capacity = 100;
  cfg.batch_size = 16;
  cfg.optim.base_lr = 1e-2;
  cfg.optim.warmup_steps = 10;
  cfg.seed = 21;
  return cfg;
}

TEST(Trainer, IdentityStudentOnNoiselessDataStaysPut) {
  SyntheticSpec spec = small_spec();
  spec.sigma_lang = 0.0;
  spec.sigma_sample = 0.0;
  spec.base_dim = spec.teacher_dim;
  TempDir dir;
  const Dataset data = make_data(dir, spec);
  TrainConfig cfg;
  cfg.weights = ObjectiveWeights::only(Objective::kFD);
  cfg.init = StudentInit::kIdentity;
  cfg.batch_size = 16;
  cfg.optim.warmup_steps = 0;
  cfg.optim.base_lr = 0.1;
  Trainer t(cfg, data);
  const StudentParams start = t.params();
  for (int i = 0; i < 20; ++i) EXPECT_EQ(t.step().total_loss, 0.0);
  EXPECT_EQ(t.params(), start);
}

TEST(Trainer, FdReducesLossOnDefaultData) {
  TempDir dir;
  const Dataset data = make_data(dir, SyntheticSpec{});
  TrainConfig cfg;
  cfg.weights = ObjectiveWeights::only(Objective::kFD);
  cfg.optim.base_lr = 1e-2;
  cfg.optim.warmup_steps = 200;
  cfg.steps = 2000;
  Trainer t(cfg, data);
  const double first = t.step().total_loss;
  double last = first;
  while (t.steps_done() < 2000) last = t.step().total_loss;
  // Observed ratio on this configuration is about 0.0037.
  EXPECT_LT(last, 0.05 * first);
}

TEST(Trainer, SameSeedSameHistory) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  auto run = [&] {
    Trainer t(drfd_config(), data);
    TrainHistory h;
    for (int i = 0; i < 40; ++i) h.steps.push_back(t.step());
    return history_csv(h);
  };
  const std::string a = run();
  EXPECT_EQ(a, run());
  TrainConfig other = drfd_config();
  other.seed = 22;
  Trainer t(other, data);
  TrainHistory h;
  for (int i = 0; i < 40; ++i) h.steps.push_back(t.step());
  EXPECT_NE(history_csv(h), a);
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  for (Arch arch : {Arch::kLinear, Arch::kMlp2}) {
    TrainConfig cfg = drfd_config();
    cfg.arch = arch;
    Trainer full(cfg, data);
    std::vector<StepRecord> reference;
    std::string saved;
    for (int i = 0; i < 200; ++i) {
      reference.push_back(full.step());
      if (i == 99) saved = encode_checkpoint(full.checkpoint());
    }
    Trainer resumed = Trainer::from_checkpoint(decode_checkpoint(saved), data);
    ASSERT_EQ(resumed.steps_done(), 100u);
    for (std::size_t i = 100; i < 200; ++i) {
      const StepRecord r = resumed.step();
      ASSERT_EQ(r.step, reference[i].step);
      ASSERT_TRUE(same_bits(r.total_loss, reference[i].total_loss)) << "step " << r.step;
    }
    EXPECT_EQ(resumed.params(), full.params());
  }
}

TEST(Trainer, ResumeRejectsDifferentDataset) {
  TempDir a, b;
  const Dataset data = make_data(a, small_spec());
  SyntheticSpec bigger = small_spec();
  bigger.n_concepts = 160;
  const Dataset other = make_data(b, bigger);
  Trainer t(drfd_config(), data);
  t.step();
  const Checkpoint c = t.checkpoint();
  EXPECT_EQ(thrown_code([&] { Trainer::from_checkpoint(c, other); }), ErrorCode::kRowCountMismatch);
  Checkpoint broken = c;
  broken.config_json = "{";
  EXPECT_EQ(thrown_code([&] { Trainer::from_checkpoint(broken, data); }), ErrorCode::kBadCheckpoint);
}

TEST(Trainer, QueueLengthGrowsToCapacity) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  Trainer t(drfd_config(), data);
  for (std::size_t s = 1; s <= 10; ++s) {
    t.step();
    EXPECT_EQ(t.queue()->size(), std::min<std::size_t>(100, s * 16));
  }
}

TEST(Trainer, TotalIsWeightedSumOfComponents) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig cfg = drfd_config();
  cfg.weights[Objective::kMCL] = 0.25;
  Trainer t(cfg, data);
  t.step();  // DR waits for a warm queue on the first step
  for (int i = 0; i < 10; ++i) {
    const StepRecord r = t.step();
    double expected = 0;
    for (Objective o : kAllObjectives) {
      const auto& c = r.components[static_cast<std::size_t>(o)];
      EXPECT_EQ(c.has_value(), cfg.weights.active(o));
      if (c) expected += cfg.weights[o] * *c;
    }
    EXPECT_NEAR(r.total_loss, expected, 1e-12 * std::max(1.0, expected));
  }
}

TEST(Trainer, DrSkippedUntilQueueWarm) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig cfg = drfd_config();
  cfg.dr_min_queue = 40;
  Trainer t(cfg, data);
  const std::size_t dr = static_cast<std::size_t>(Objective::kDR);
  // Rows queued before each step: 0, 16, 32, 48.
  EXPECT_FALSE(t.step().components[dr].has_value());
  EXPECT_FALSE(t.step().components[dr].has_value());
  EXPECT_FALSE(t.step().components[dr].has_value());
  EXPECT_TRUE(t.step().components[dr].has_value());
}

TEST(Trainer, DefaultWarmupSkipsOnlyTheFirstStep) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig cfg = drfd_config();
  cfg.weights = ObjectiveWeights::only(Objective::kDR);
  Trainer t(cfg, data);
  const std::size_t dr = static_cast<std::size_t>(Objective::kDR);
  const StepRecord first = t.step();
  EXPECT_FALSE(first.components[dr].has_value());
  EXPECT_EQ(first.total_loss, 0.0);
  EXPECT_TRUE(t.step().components[dr].has_value());
}

TEST(Trainer, WarmupStartsAtZeroLearningRate) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  Trainer t(drfd_config(), data);
  const StudentParams start = t.params();
  const StepRecord first = t.step();
  EXPECT_EQ(first.lr, 0.0);
  EXPECT_EQ(t.params(), start);
  EXPECT_DOUBLE_EQ(t.step().lr, 1e-3);
}

TEST(Trainer, SinglePrecisionRoundsParameters) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig cfg = drfd_config();
  cfg.precision = Precision::kF32;
  Trainer t(cfg, data);
  for (int i = 0; i < 15; ++i) t.step();
  for (const auto& l : t.params().layers)
    for (double w : l.weight.data()) EXPECT_EQ(static_cast<double>(static_cast<float>(w)), w);
}

TEST(Trainer, RunTrainingWritesArtifacts) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig cfg = drfd_config();
  cfg.epochs = 2;
  cfg.checkpoint_every = 5;
  cfg.eval_every = 4;
  TempDir out;
  const TrainHistory h = train(cfg, data, out.path());
  Trainer probe(cfg, data);
  ASSERT_EQ(h.steps.size(), probe.planned_steps());
  for (const char* f : {"final.kdck", "checkpoint.kdck", "history.csv", "step_5.kdck"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  EXPECT_EQ(slurp(out / "history.csv"), history_csv(h));
  EXPECT_TRUE(h.steps[3].val_recall.has_value());
  EXPECT_FALSE(h.steps[2].val_recall.has_value());
  const std::string csv = history_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,total_loss,FD,ED,SD,MCL,DR,lr,val_R@1");

  TempDir again;
  train(cfg, data, again.path());
  EXPECT_EQ(slurp(again / "history.csv"), slurp(out / "history.csv"));
  EXPECT_EQ(slurp(again / "final.kdck"), slurp(out / "final.kdck"));
}

TEST(Trainer, ResumeFromFileContinuesToTarget) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig cfg = drfd_config();
  cfg.steps = 30;
  cfg.checkpoint_every = 10;
  TempDir full, part;
  const TrainHistory reference = train(cfg, data, full.path());
  const TrainHistory tail = resume(full / "step_10.kdck", data, part.path());
  ASSERT_EQ(tail.steps.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_TRUE(same_bits(tail.steps[i].total_loss, reference.steps[i + 10].total_loss));
  EXPECT_EQ(slurp(part / "final.kdck"), slurp(full / "final.kdck"));
}

TEST(Trainer, ConfigValidation) {
  TempDir dir;
  const Dataset data = make_data(dir, small_spec());
  TrainConfig bad = drfd_config();
  bad.batch_size = 0;
  EXPECT_EQ(thrown_code([&] { Trainer(bad, data); }), ErrorCode::kBadConfig);
  bad = drfd_config();
  bad.weights = ObjectiveWeights{};
  EXPECT_EQ(thrown_code([&] { Trainer(bad, data); }), ErrorCode::kBadConfig);
  bad = drfd_config();
  bad.anchor_language = "xx";
  EXPECT_EQ(thrown_code([&] { Trainer(bad, data); }), ErrorCode::kBadConfig);
}

TEST(Trainer, ConfigJsonRoundTrip) {
  TrainConfig cfg = drfd_config();
  cfg.arch = Arch::kMlp2;
  cfg.hidden_dim = 24;
  cfg.precision = Precision::kF32;
  cfg.anchor_source = AnchorSource::kImage;
  const nlohmann::json j = train_config_to_json(cfg);
  EXPECT_EQ(train_config_to_json(train_config_from_json(j)), j);
}

}  // namespace
}  // namespace kdalign
