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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "kdalign/tensor.hpp"

namespace kdalign {

// Student multilingual, student anchor-language and teacher anchor embeddings
// for one batch. Row i of each matrix belongs to sample i.
struct AnchorTriple {
  Matrix zs_m;
  Matrix zs_e;
  Matrix zt_e;

  std::size_t batch_size() const noexcept { return zt_e.rows(); }
  // Throws DimMismatch unless all three are B x D, EmptyInput when B == 0.
  void validate() const;
};

// Loss value and its gradient with respect to both student inputs. The teacher
// side is frozen and never receives a gradient.
struct LossReport {
  double value = 0.0;
  Matrix grad_zs_m;
  Matrix grad_zs_e;
};

enum class Objective : std::size_t { kFD = 0, kED, kSD, kMCL, kDR };
inline constexpr std::size_t kNumObjectives = 5;
inline constexpr std::array<Objective, kNumObjectives> kAllObjectives = {
    Objective::kFD, Objective::kED, Objective::kSD, Objective::kMCL, Objective::kDR};

std::string_view objective_name(Objective o);
std::optional<Objective> parse_objective(std::string_view name);

class ObjectiveWeights {
 public:
  ObjectiveWeights() = default;
  static ObjectiveWeights only(Objective o, double weight = 1.0);

  double operator[](Objective o) const { return w_[static_cast<std::size_t>(o)]; }
  double& operator[](Objective o) { return w_[static_cast<std::size_t>(o)]; }
  bool active(Objective o) const { return (*this)[o] > 0.0; }

  // BadConfig when any weight is negative or non-finite, or all are zero.
  void validate() const;

 private:
  std::array<double, kNumObjectives> w_{};
};

struct LossConfig {
  double tau_teacher = 0.05;  // DR teacher-reference distribution
  double tau_student = 0.07;  // DR student-control / student-generalize
  double tau_mcl = 0.07;
  double tau_sd = 1.0;
  Similarity similarity = Similarity::kCosine;  // used by MCL and DR
};

// Feature distillation: mean squared distance of the multilingual student
// embedding to the teacher anchor.
LossReport fd_loss(const AnchorTriple& t);

// FD applied to both the multilingual and the anchor-language student outputs.
LossReport ed_loss(const AnchorTriple& t);

// Cross-entropy between softmax(zt_e / tau) and softmax(zs_m / tau) over the
// embedding dimensions.
LossReport sd_loss(const AnchorTriple& t, double tau);

// Mean of two InfoNCE terms with the teacher batch as the key set: one with the
// anchor-language student queries, one with the multilingual student queries.
LossReport mcl_loss(const AnchorTriple& t, double tau, Similarity sim = Similarity::kCosine);

// Row i: softmax over k of sim(z_i, q_k) / tau.
Matrix dr_distribution(const Matrix& z, const Matrix& queue, double tau,
                       Similarity sim = Similarity::kCosine);

// Distributional replication against the queue. The teacher-reference
// distribution is the target for both the student-control (anchor language)
// and student-generalize (multilingual) distributions; the two cross-entropies
// are averaged.
LossReport dr_loss(const AnchorTriple& t, const Matrix& queue, double tau_teacher,
                   double tau_student, Similarity sim = Similarity::kCosine);

struct CombinedLoss {
  LossReport total;
  // Unweighted value of each evaluated component; empty for weight zero.
  std::array<std::optional<double>, kNumObjectives> components;
};

// Weighted sum of the active objectives. `queue` is required iff DR is active.
CombinedLoss combined_loss(const AnchorTriple& t, const Matrix* queue,
                           const ObjectiveWeights& weights, const LossConfig& cfg);

}  // namespace kdalign
