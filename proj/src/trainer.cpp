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

#include "kdalign/trainer.hpp"

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "binary_io.hpp"
#include "format.hpp"
#include "kdalign/checkpoint.hpp"
#include "kdalign/config.hpp"
#include "kdalign/error.hpp"
#include "kdalign/evaluate.hpp"

namespace kdalign {

namespace {

// The data stream gets its own engine, derived from the run seed, so that the
// student initialization and the batch order do not share draws.
std::uint64_t sampler_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

StudentParams initial_params(const TrainConfig& cfg, const Dataset& data) {
  if (cfg.init == StudentInit::kIdentity) {
    if (cfg.arch != Arch::kLinear) fail(ErrorCode::kBadConfig, "identity init requires the linear arch");
    return student_identity(data.base_dim(), data.teacher_dim());
  }
  return student_init(cfg.arch, data.base_dim(), data.teacher_dim(), cfg.seed, cfg.hidden_dim);
}

void round_to_f32(StudentParams& p) {
  for (auto& l : p.layers) {
    for (double& w : l.weight.data()) w = static_cast<double>(static_cast<float>(w));
    for (double& b : l.bias) b = static_cast<double>(static_cast<float>(b));
  }
}

void check_anchor(const TrainConfig& cfg, const Manifest& m) {
  if (!cfg.anchor_language.empty() && cfg.anchor_language != m.anchor_language) {
    fail(ErrorCode::kBadConfig, "dataset anchor language '" + m.anchor_language +
                                    "' differs from configured '" + cfg.anchor_language + "'");
  }
  if (cfg.anchor_source && *cfg.anchor_source != m.anchor_source) {
    fail(ErrorCode::kBadConfig, "dataset anchor source differs from the configured one");
  }
}

}  // namespace

void TrainConfig::validate() const {
  weights.validate();
  require_temperature(loss.tau_teacher, "loss.tau_teacher");
  require_temperature(loss.tau_student, "loss.tau_student");
  require_temperature(loss.tau_mcl, "loss.tau_mcl");
  require_temperature(loss.tau_sd, "loss.tau_sd");
  if (queue_capacity == 0) fail(ErrorCode::kBadConfig, "queue.capacity must be >= 1");
  if (batch_size == 0) fail(ErrorCode::kBadConfig, "train.batch_size must be >= 1");
  if (steps == 0 && epochs == 0) fail(ErrorCode::kBadConfig, "one of train.steps or train.epochs must be positive");
  if (!(optim.base_lr >= 0.0) || !std::isfinite(optim.base_lr)) {
    fail(ErrorCode::kBadConfig, "optim.lr must be >= 0");
  }
  if (!(optim.beta1 >= 0.0 && optim.beta1 < 1.0) || !(optim.beta2 >= 0.0 && optim.beta2 < 1.0)) {
    fail(ErrorCode::kBadConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(optim.eps > 0.0)) fail(ErrorCode::kBadConfig, "optim.eps must be positive");
}

Manifest apply_anchor_overrides(Manifest m, const TrainConfig& cfg) {
  if (!cfg.anchor_language.empty()) m.anchor_language = cfg.anchor_language;
  if (cfg.anchor_source) m.anchor_source = *cfg.anchor_source;
  return m;
}

std::string history_csv(const TrainHistory& h) {
  std::ostringstream os;
  os << "step,total_loss";
  for (Objective o : kAllObjectives) os << ',' << objective_name(o);
  os << ",lr,val_R@1\n";
  for (const auto& s : h.steps) {
    os << s.step << ',' << detail::format_double(s.total_loss);
    for (const auto& c : s.components) os << ',' << (c ? detail::format_double(*c) : "");
    os << ',' << detail::format_double(s.lr) << ','
       << (s.val_recall ? detail::format_double(*s.val_recall) : "") << '\n';
  }
  return os.str();
}

Trainer::Trainer(TrainConfig cfg, const Dataset& data)
    : Trainer(cfg, data, initial_params(cfg, data), OptimizerState{}) {
  optimizer_ = adam_init(params_, cfg_.optim);
}

Trainer::Trainer(TrainConfig cfg, const Dataset& data, StudentParams params, OptimizerState opt)
    : cfg_(std::move(cfg)),
      data_(&data),
      params_(std::move(params)),
      optimizer_(std::move(opt)),
      sampler_(data, "train", cfg_.batch_size, sampler_seed(cfg_.seed)) {
  cfg_.validate();
  check_anchor(cfg_, data.manifest);
  if (cfg_.weights.active(Objective::kDR)) queue_.emplace(cfg_.queue_capacity, data.teacher_dim());
}

Trainer Trainer::from_checkpoint(const Checkpoint& ckpt, const Dataset& data) {
  TrainConfig cfg;
  try {
    cfg = train_config_from_json(nlohmann::json::parse(ckpt.config_json));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBadCheckpoint, std::string("embedded config unreadable: ") + e.what());
  }
  if (ckpt.dataset_rows != data.manifest.num_rows) {
    fail(ErrorCode::kRowCountMismatch, "checkpoint was trained on " + std::to_string(ckpt.dataset_rows) +
                                           " rows, manifest has " + std::to_string(data.manifest.num_rows));
  }
  if (ckpt.params.in_dim != data.base_dim() || ckpt.params.out_dim != data.teacher_dim()) {
    fail(ErrorCode::kDimMismatch, "checkpoint dims do not match the dataset");
  }
  Trainer t(cfg, data, ckpt.params, ckpt.optimizer);
  if (t.queue_) {
    if (ckpt.queue_capacity != cfg.queue_capacity || ckpt.queue_rows.cols() != data.teacher_dim()) {
      fail(ErrorCode::kBadCheckpoint, "queue section does not match the embedded config");
    }
    t.queue_->push_batch(ckpt.queue_rows);
  }
  t.sampler_.restore(ckpt.sampler);
  t.dr_warm_logged_ = t.queue_ && t.queue_->size() >= cfg.min_queue();
  return t;
}

std::uint64_t Trainer::planned_steps() const {
  if (cfg_.steps > 0) return cfg_.steps;
  return static_cast<std::uint64_t>(cfg_.epochs) * sampler_.batches_per_epoch();
}

bool Trainer::at_epoch_boundary() const {
  return sampler_.position() == sampler_.batches_per_epoch();
}

StepRecord Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  Batch batch = sampler_.next();
  ForwardResult multi = student_forward(params_, batch.base_multi);
  ForwardResult anchor = student_forward(params_, batch.base_anchor);
  const AnchorTriple triple{multi.output, anchor.output, std::move(batch.teacher_anchor)};

  ObjectiveWeights weights = cfg_.weights;
  Matrix snapshot;
  if (queue_) {
    // Warmth is judged on the rows already queued before this batch arrives.
    const std::size_t queued = queue_->size();
    queue_->push_batch(triple.zt_e);
    if (queued < cfg_.min_queue()) {
      if (!dr_warm_logged_) {
        spdlog::warn("DR skipped at step {}: queue held {} of the {} rows required; waiting for the queue to warm up",
                     optimizer_.step + 1, queued, cfg_.min_queue());
        dr_warm_logged_ = true;
      }
      weights[Objective::kDR] = 0.0;
    } else {
      snapshot = queue_->snapshot();
    }
  }

  bool any_active = false;
  for (Objective o : kAllObjectives) any_active = any_active || weights.active(o);

  StepRecord rec;
  CombinedLoss loss;
  if (any_active) {
    loss = combined_loss(triple, queue_ ? &snapshot : nullptr, weights, cfg_.loss);
  } else {
    loss.total = {0.0, Matrix(triple.zs_m.rows(), triple.zs_m.cols()),
                  Matrix(triple.zs_e.rows(), triple.zs_e.cols())};
  }
  if (!std::isfinite(loss.total.value)) {
    spdlog::error("non-finite loss at step {}", optimizer_.step + 1);
    fail(ErrorCode::kNonFiniteLoss, "loss is not finite at step " + std::to_string(optimizer_.step + 1));
  }

  StudentGrads grads = student_backward(params_, multi.tape, loss.total.grad_zs_m);
  grads += student_backward(params_, anchor.tape, loss.total.grad_zs_e);

  rec.lr = effective_lr(optimizer_);
  adam_step(optimizer_, params_, grads);
  if (cfg_.precision == Precision::kF32) round_to_f32(params_);

  rec.step = optimizer_.step;
  rec.total_loss = loss.total.value;
  rec.components = loss.components;
  if (cfg_.eval_every > 0 && rec.step % cfg_.eval_every == 0 && data_->manifest.splits.contains("val") &&
      !data_->manifest.split("val").empty()) {
    rec.val_recall = multilingual_i2t_recall(*data_, &params_, "val");
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.params = params_;
  c.optimizer = optimizer_;
  if (queue_) {
    c.queue_capacity = static_cast<std::uint32_t>(queue_->capacity());
    c.queue_rows = queue_->snapshot();
  }
  c.sampler = sampler_.state();
  c.dataset_rows = data_->manifest.num_rows;
  c.config_json = train_config_to_json(cfg_).dump();
  return c;
}

TrainHistory run_training(Trainer& trainer, const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> until) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::uint64_t target = until.value_or(trainer.planned_steps());
  const std::uint64_t log_every = std::max<std::uint64_t>(1, target / 10);
  const auto& cfg = trainer.config();
  TrainHistory history;
  while (trainer.steps_done() < target) {
    StepRecord rec = trainer.step();
    if (rec.step % log_every == 0 || rec.step == target) {
      if (rec.val_recall) {
        spdlog::info("step {}/{} loss {:.6g} lr {:.3g} val R@1 {:.4f}", rec.step, target, rec.total_loss,
                     rec.lr, *rec.val_recall);
      } else {
        spdlog::info("step {}/{} loss {:.6g} lr {:.3g}", rec.step, target, rec.total_loss, rec.lr);
      }
    } else {
      spdlog::debug("step {} loss {:.6g}", rec.step, rec.total_loss);
    }
    history.steps.push_back(rec);
    if (cfg.checkpoint_every > 0 && rec.step % cfg.checkpoint_every == 0) {
      write_checkpoint(out_dir / ("step_" + std::to_string(rec.step) + ".kdck"), trainer.checkpoint());
    }
    if (trainer.at_epoch_boundary()) write_checkpoint(out_dir / "checkpoint.kdck", trainer.checkpoint());
  }
  write_checkpoint(out_dir / "final.kdck", trainer.checkpoint());
  detail::write_file(out_dir / "history.csv", history_csv(history));

  double seconds = 0.0;
  for (const auto& s : history.steps) seconds += s.seconds;
  spdlog::info("trained {} steps in {:.2f}s", history.steps.size(), seconds);
  return history;
}

TrainHistory train(const TrainConfig& cfg, const Dataset& data, const std::filesystem::path& out_dir) {
  Trainer trainer(cfg, data);
  return run_training(trainer, out_dir);
}

TrainHistory resume(const std::filesystem::path& checkpoint, const Dataset& data,
                    const std::filesystem::path& out_dir, std::optional<std::uint64_t> until) {
  Trainer trainer = Trainer::from_checkpoint(read_checkpoint(checkpoint), data);
  spdlog::info("resuming at step {}", trainer.steps_done());
  return run_training(trainer, out_dir, until);
}

}  // namespace kdalign
