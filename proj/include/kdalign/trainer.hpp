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

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kdalign/dataset.hpp"
#include "kdalign/objectives.hpp"
#include "kdalign/queue.hpp"
#include "kdalign/student.hpp"

namespace kdalign {

enum class StudentInit { kUniform, kIdentity };
enum class Precision { kF64, kF32 };

struct TrainConfig {
  ObjectiveWeights weights;
  LossConfig loss;
  std::size_t queue_capacity = 4096;
  std::size_t dr_min_queue = 0;  // 0: one full batch
  AdamConfig optim;
  Arch arch = Arch::kLinear;
  std::size_t hidden_dim = 0;
  StudentInit init = StudentInit::kUniform;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t steps = 0;  // when > 0, overrides epochs
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;
  std::size_t checkpoint_every = 0;
  // kF32 rounds the parameters to single precision after every update.
  Precision precision = Precision::kF64;
  std::string anchor_language;               // empty: manifest value
  std::optional<AnchorSource> anchor_source;  // empty: manifest value

  void validate() const;
  std::size_t min_queue() const { return dr_min_queue == 0 ? batch_size : dr_min_queue; }
};

struct StepRecord {
  std::uint64_t step = 0;  // 1-based
  double total_loss = 0.0;
  std::array<std::optional<double>, kNumObjectives> components;
  double lr = 0.0;
  std::optional<double> val_recall;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
};

// history.csv: step,total_loss,FD,ED,SD,MCL,DR,lr,val_R@1. Components that were
// not evaluated and steps without validation leave the cell empty. Wall-clock
// time is not written, so identical runs give identical files.
std::string history_csv(const TrainHistory& h);

// The manifest with the config's anchor overrides applied.
Manifest apply_anchor_overrides(Manifest m, const TrainConfig& cfg);

struct Checkpoint;

class Trainer {
 public:
  // `data` must outlive the trainer.
  Trainer(TrainConfig cfg, const Dataset& data);
  // BadCheckpoint for an unreadable embedded config, RowCountMismatch when the
  // dataset size differs from the one trained on, DimMismatch for widths.
  static Trainer from_checkpoint(const Checkpoint& ckpt, const Dataset& data);

  // One optimization step: sample, forward both streams, update the queue,
  // combined loss, backward, Adam.
  StepRecord step();

  std::uint64_t steps_done() const noexcept { return optimizer_.step; }
  std::uint64_t planned_steps() const;
  bool at_epoch_boundary() const;

  Checkpoint checkpoint() const;

  const TrainConfig& config() const noexcept { return cfg_; }
  const StudentParams& params() const noexcept { return params_; }
  const NegativeQueue* queue() const noexcept { return queue_ ? &*queue_ : nullptr; }
  const BatchSampler& sampler() const noexcept { return sampler_; }

 private:
  Trainer(TrainConfig cfg, const Dataset& data, StudentParams params, OptimizerState opt);

  TrainConfig cfg_;
  const Dataset* data_;
  StudentParams params_;
  OptimizerState optimizer_;
  std::optional<NegativeQueue> queue_;
  BatchSampler sampler_;
  bool dr_warm_logged_ = false;
};

// Runs the trainer to `until` steps (planned_steps() by default), writing
// checkpoint.kdck at epoch boundaries, step_<n>.kdck every checkpoint_every
// steps, and final.kdck plus history.csv at the end.
TrainHistory run_training(Trainer& trainer, const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> until = std::nullopt);

TrainHistory train(const TrainConfig& cfg, const Dataset& data, const std::filesystem::path& out_dir);

// Continues from a KDCK file. A resumed run reproduces the uninterrupted one
// step for step.
TrainHistory resume(const std::filesystem::path& checkpoint, const Dataset& data,
                    const std::filesystem::path& out_dir,
                    std::optional<std::uint64_t> until = std::nullopt);

}  // namespace kdalign
