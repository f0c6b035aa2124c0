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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "kdalign/tensor.hpp"

namespace kdalign {

enum class Arch : std::uint8_t { kLinear = 0, kMlp2 = 1 };

std::string_view arch_name(Arch a);
std::optional<Arch> parse_arch(std::string_view name);

// y = x * weight + bias, with weight stored in_dim x out_dim.
struct AffineLayer {
  Matrix weight;
  Vector bias;

  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

// Trainable projection head. Linear: one affine map. Mlp2: affine, tanh, affine.
struct StudentParams {
  Arch arch = Arch::kLinear;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 0;  // zero for linear
  std::size_t out_dim = 0;
  std::vector<AffineLayer> layers;

  std::size_t parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const StudentParams&, const StudentParams&) = default;
};

// Same layout as StudentParams::layers; one gradient per parameter.
struct StudentGrads {
  std::vector<AffineLayer> layers;

  StudentGrads& operator+=(const StudentGrads& other);
  bool all_finite() const;
};

// Uniform in +-1/sqrt(fan_in) for every weight and bias, from a 64-bit
// Mersenne Twister seeded with `seed`. hidden_dim == 0 means out_dim for mlp2.
StudentParams student_init(Arch arch, std::size_t in_dim, std::size_t out_dim,
                           std::uint64_t seed, std::size_t hidden_dim = 0);

// Linear head with weight(i, i) = 1 on the leading diagonal, zero elsewhere.
StudentParams student_identity(std::size_t in_dim, std::size_t out_dim);

StudentGrads zero_grads(const StudentParams& p);

struct ForwardTape {
  Matrix input;
  Matrix hidden;  // tanh activations, mlp2 only
};

struct ForwardResult {
  Matrix output;
  ForwardTape tape;
};

ForwardResult student_forward(const StudentParams& p, const Matrix& x);

// Output only, without a tape; for evaluation.
Matrix student_embed(const StudentParams& p, const Matrix& x);

StudentGrads student_backward(const StudentParams& p, const ForwardTape& tape,
                              const Matrix& grad_output);

struct AdamConfig {
  double base_lr = 1e-4;
  std::uint64_t warmup_steps = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<AffineLayer> first_moment;
  std::vector<AffineLayer> second_moment;
};

OptimizerState adam_init(const StudentParams& p, const AdamConfig& config);

// base_lr * min(1, step / warmup_steps); base_lr when warmup_steps == 0.
double effective_lr(const OptimizerState& opt);

// One Adam update with bias correction, then step += 1. Throws
// NonFiniteGradient before touching any state if a gradient is NaN/Inf.
void adam_step(OptimizerState& opt, StudentParams& p, const StudentGrads& grads);

}  // namespace kdalign
