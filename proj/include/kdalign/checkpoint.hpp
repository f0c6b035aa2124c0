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

// KDCK checkpoints. Layout, little-endian:
//   magic "KDCK" | version u32 (= 1)
//   | arch u8 | in_dim u32 | hidden_dim u32 | out_dim u32 | layer count u32
//   | per layer: rows u32, cols u32, weight f64[rows*cols], bias len u32, bias f64[]
//   | adam: step u64, base_lr f64, warmup u64, beta1 f64, beta2 f64, eps f64,
//     first then second moments in the parameter layout
//   | queue: capacity u32, dim u32, len u32, rows f64[len*dim] oldest first
//   | sampler: epoch u64, position u64, engine state (u32 length + bytes)
//   | dataset rows u64 | config JSON (u32 length + bytes)
// Every read failure, including a wrong magic or version, is BadCheckpoint.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "kdalign/dataset.hpp"
#include "kdalign/student.hpp"
#include "kdalign/tensor.hpp"

namespace kdalign {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  StudentParams params;
  OptimizerState optimizer;
  std::uint32_t queue_capacity = 0;
  Matrix queue_rows;  // queue_capacity == 0: no queue
  SamplerState sampler;
  std::uint64_t dataset_rows = 0;
  std::string config_json;
};

std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace kdalign
