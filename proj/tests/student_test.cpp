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
#include <limits>
#include <random>

#include "kdalign/error.hpp"
#include "kdalign/objectives.hpp"
#include "kdalign/student.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace kdalign {
namespace {

using testing::random_matrix;
using testing::thrown_code;

// Flat views over every parameter in layer order: weight then bias.
std::vector<double*> param_slots(std::vector<AffineLayer>& layers) {
  std::vector<double*> out;
  for (auto& l : layers) {
    for (double& w : l.weight.data()) out.push_back(&w);
    for (double& b : l.bias) out.push_back(&b);
  }
  return out;
}

StudentParams randomized(StudentParams p, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 0.5);
  for (double* s : param_slots(p.layers)) *s = n01(rng);
  return p;
}

TEST(StudentInit, DeterministicAndShaped) {
  EXPECT_EQ(student_init(Arch::kMlp2, 8, 16, 7), student_init(Arch::kMlp2, 8, 16, 7));
  EXPECT_FALSE(student_init(Arch::kLinear, 8, 16, 7) == student_init(Arch::kLinear, 8, 16, 8));

  const StudentParams lin = student_init(Arch::kLinear, 4, 4, 1);
  ASSERT_EQ(lin.layers.size(), 1u);
  EXPECT_EQ(lin.layers[0].weight.rows(), 4u);
  EXPECT_EQ(lin.layers[0].weight.cols(), 4u);
  EXPECT_EQ(lin.layers[0].bias.size(), 4u);

  const StudentParams mlp = student_init(Arch::kMlp2, 8, 16, 1, 16);
  ASSERT_EQ(mlp.layers.size(), 2u);
  EXPECT_EQ(mlp.layers[0].weight.rows(), 8u);
  EXPECT_EQ(mlp.layers[0].weight.cols(), 16u);
  EXPECT_EQ(mlp.layers[1].weight.rows(), 16u);
  EXPECT_EQ(mlp.layers[1].weight.cols(), 16u);
  EXPECT_EQ(mlp.parameter_count(), 8u * 16 + 16 + 16 * 16 + 16);
}

TEST(StudentInit, UniformBound) {
  const StudentParams p = student_init(Arch::kMlp2, 9, 5, 3, 4);
  for (const double w : p.layers[0].weight.data()) EXPECT_LE(std::abs(w), 1.0 / 3.0);
  for (const double w : p.layers[1].weight.data()) EXPECT_LE(std::abs(w), 0.5);
}

TEST(StudentForward, IdentityAndBias) {
  std::mt19937_64 rng(50);
  const Matrix x = random_matrix(6, 4, rng);
  EXPECT_EQ(student_forward(student_identity(4, 4), x).output, x);

  StudentParams p = student_identity(4, 3);
  p.layers[0].bias = {1.5, -2.0, 0.25};
  const Matrix z = student_embed(p, Matrix(5, 4));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(z(i, j), p.layers[0].bias[j]);
}

TEST(StudentForward, Mlp2MatchesLoopOracle) {
  std::mt19937_64 rng(51);
  const StudentParams p = student_init(Arch::kMlp2, 5, 3, 9, 7);
  const Matrix x = random_matrix(4, 5, rng);
  const Matrix z = student_embed(p, x);
  const auto& l0 = p.layers[0];
  const auto& l1 = p.layers[1];
  for (std::size_t n = 0; n < 4; ++n) {
    std::vector<double> h(7);
    for (std::size_t j = 0; j < 7; ++j) {
      double s = l0.bias[j];
      for (std::size_t i = 0; i < 5; ++i) s += x(n, i) * l0.weight(i, j);
      h[j] = std::tanh(s);
    }
    for (std::size_t k = 0; k < 3; ++k) {
      double s = l1.bias[k];
      for (std::size_t j = 0; j < 7; ++j) s += h[j] * l1.weight(j, k);
      EXPECT_NEAR(z(n, k), s, 1e-12);
    }
  }
}

TEST(StudentForward, DimMismatch) {
  EXPECT_EQ(thrown_code([] { student_embed(student_identity(4, 4), Matrix(2, 3)); }), ErrorCode::kDimMismatch);
}

TEST(StudentBackward, ZeroUpstreamGivesZero) {
  std::mt19937_64 rng(52);
  const StudentParams p = student_init(Arch::kMlp2, 4, 3, 2);
  const ForwardResult f = student_forward(p, random_matrix(5, 4, rng));
  StudentGrads g = student_backward(p, f.tape, Matrix(5, 3));
  for (double* s : param_slots(g.layers)) EXPECT_EQ(*s, 0.0);
}

TEST(StudentBackward, LinearClosedForm) {
  std::mt19937_64 rng(53);
  const StudentParams p = student_init(Arch::kLinear, 4, 3, 2);
  const Matrix x = random_matrix(5, 4, rng);
  const Matrix gz = random_matrix(5, 3, rng);
  const StudentGrads g = student_backward(p, student_forward(p, x).tape, gz);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t n = 0; n < 5; ++n) s += x(n, i) * gz(n, j);
      EXPECT_NEAR(g.layers[0].weight(i, j), s, 1e-12);
    }
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0;
    for (std::size_t n = 0; n < 5; ++n) s += gz(n, j);
    EXPECT_NEAR(g.layers[0].bias[j], s, 1e-12);
  }
}

// Parameter gradient of combined_loss(forward(x_m), forward(x_e), zt) through
// both student streams, checked against central differences on every weight.
double end_to_end_error(Arch arch, const ObjectiveWeights& w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  StudentParams p = randomized(student_init(arch, 4, 3, seed, 5), rng);
  const Matrix xm = random_matrix(3, 4, rng), xe = random_matrix(3, 4, rng);
  const Matrix zt = random_matrix(3, 3, rng), q = random_matrix(6, 3, rng);
  const LossConfig cfg;

  auto loss_of = [&](const StudentParams& params) {
    const AnchorTriple t{student_embed(params, xm), student_embed(params, xe), zt};
    return combined_loss(t, &q, w, cfg).total.value;
  };

  const ForwardResult fm = student_forward(p, xm), fe = student_forward(p, xe);
  const CombinedLoss c = combined_loss({fm.output, fe.output, zt}, &q, w, cfg);
  StudentGrads g = student_backward(p, fm.tape, c.total.grad_zs_m);
  g += student_backward(p, fe.tape, c.total.grad_zs_e);

  std::vector<double> analytic, numeric;
  auto slots = param_slots(p.layers);
  auto gslots = param_slots(g.layers);
  const double h = 1e-5;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double orig = *slots[i];
    *slots[i] = orig + h;
    const double up = loss_of(p);
    *slots[i] = orig - h;
    const double down = loss_of(p);
    *slots[i] = orig;
    numeric.push_back((up - down) / (2 * h));
    analytic.push_back(*gslots[i]);
  }
  return testing::gradient_rel_error(analytic, numeric);
}

TEST(StudentBackward, EndToEndFiniteDifferences) {
  ObjectiveWeights drfd;
  drfd[Objective::kDR] = 1.0;
  drfd[Objective::kFD] = 0.5;
  for (Arch arch : {Arch::kLinear, Arch::kMlp2}) {
    for (Objective o : kAllObjectives) EXPECT_LT(end_to_end_error(arch, ObjectiveWeights::only(o), 60), 1e-5);
    EXPECT_LT(end_to_end_error(arch, drfd, 61), 1e-5);
  }
}

TEST(Adam, WarmupSchedule) {
  StudentParams p = student_init(Arch::kLinear, 3, 2, 4);
  const StudentParams before = p;
  AdamConfig cfg;
  cfg.base_lr = 1e-3;
  cfg.warmup_steps = 1000;
  OptimizerState opt = adam_init(p, cfg);
  EXPECT_EQ(effective_lr(opt), 0.0);
  StudentGrads g = zero_grads(p);
  for (double* s : param_slots(g.layers)) *s = 1.0;
  adam_step(opt, p, g);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.step, 1u);
  opt.step = 1000;
  EXPECT_EQ(effective_lr(opt), 1e-3);
  opt.step = 500;
  EXPECT_DOUBLE_EQ(effective_lr(opt), 5e-4);
  opt.step = 5000;
  EXPECT_EQ(effective_lr(opt), 1e-3);
}

TEST(Adam, QuadraticDecreasesMonotonically) {
  StudentParams p = student_identity(1, 1);
  p.layers[0].weight(0, 0) = -2.0;
  AdamConfig cfg;
  cfg.base_lr = 0.1;
  cfg.warmup_steps = 0;
  OptimizerState opt = adam_init(p, cfg);
  auto loss = [](double w) { return (w - 3.0) * (w - 3.0); };
  double prev = loss(p.layers[0].weight(0, 0));
  for (int i = 0; i < 10; ++i) {
    StudentGrads g = zero_grads(p);
    g.layers[0].weight(0, 0) = 2.0 * (p.layers[0].weight(0, 0) - 3.0);
    adam_step(opt, p, g);
    const double cur = loss(p.layers[0].weight(0, 0));
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  StudentParams p = student_init(Arch::kLinear, 2, 2, 5);
  const StudentParams before = p;
  OptimizerState opt = adam_init(p, AdamConfig{});
  StudentGrads g = zero_grads(p);
  g.layers[0].bias[1] = std::numeric_limits<double>::infinity();
  EXPECT_EQ(thrown_code([&] { adam_step(opt, p, g); }), ErrorCode::kNonFiniteGradient);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.step, 0u);
}

TEST(ArchNames, RoundTrip) {
  for (Arch a : {Arch::kLinear, Arch::kMlp2}) EXPECT_EQ(parse_arch(arch_name(a)), a);
  EXPECT_FALSE(parse_arch("transformer").has_value());
}

}  // namespace
}  // namespace kdalign
