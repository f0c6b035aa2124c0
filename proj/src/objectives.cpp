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

#include "kdalign/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kdalign/error.hpp"
#include "kdalign/parallel.hpp"

namespace kdalign {
namespace {

struct RowLosses {
  Vector losses;
  Matrix grad;
};

// For each query row u_i: loss_i = -sum_k target(i,k) * log softmax_k(sim(u_i, key_k) / tau)
// and d loss_i / d u_i. Target rows must sum to one.
RowLosses similarity_cross_entropy(const Matrix& queries, const Matrix& keys,
                                   const Matrix& targets, double tau, Similarity sim) {
  const std::size_t n = queries.rows();
  const std::size_t k = keys.rows();
  const std::size_t d = queries.cols();

  Vector norms(n, 1.0);
  Matrix unit_queries = queries;
  Matrix unit_keys = keys;
  if (sim == Similarity::kCosine) {
    for (std::size_t i = 0; i < n; ++i) norms[i] = l2_norm(queries.row(i));
    unit_queries = normalize_rows(queries);
    unit_keys = normalize_rows(keys);
  }
  Matrix scores = pairwise_dot(unit_queries, unit_keys);
  if (sim == Similarity::kCosine) {
    for (double& s : scores.data()) s = std::clamp(s, -1.0, 1.0);
  }

  RowLosses out{Vector(n, 0.0), Matrix(n, d)};
  parallel_for(n, [&](std::size_t i) {
    const auto s = scores.row(i);
    const auto t = targets.row(i);
    const double smax = *std::ranges::max_element(s);
    Vector coef(k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += (coef[j] = std::exp((s[j] - smax) / tau));
    const double log_z = std::log(z);

    double loss = 0.0;
    double coef_dot_s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (t[j] != 0.0) loss -= t[j] * ((s[j] - smax) / tau - log_z);
      coef[j] = (coef[j] / z - t[j]) / tau;
      coef_dot_s += coef[j] * s[j];
    }
    out.losses[i] = loss;

    auto g = out.grad.row(i);
    double* __restrict acc = g.data();
    const double* __restrict key = unit_keys.data().data();
    for (std::size_t j = 0; j < k; ++j, key += d) {
      const double cj = coef[j];
      for (std::size_t c = 0; c < d; ++c) acc[c] += cj * key[c];
    }
    if (sim == Similarity::kCosine) {
      // d cos(u, k) / d u = (k_hat - cos * u_hat) / |u|
      const auto u_hat = unit_queries.row(i);
      for (std::size_t c = 0; c < d; ++c) g[c] = (g[c] - coef_dot_s * u_hat[c]) / norms[i];
    }
  });
  return out;
}

double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

void AnchorTriple::validate() const {
  if (zt_e.rows() == 0) fail(ErrorCode::kEmptyInput, "anchor triple has no rows");
  if (!zs_m.same_shape(zt_e) || !zs_e.same_shape(zt_e)) {
    fail(ErrorCode::kDimMismatch, "anchor triple shapes differ: zs_m " + std::to_string(zs_m.rows()) +
                                      "x" + std::to_string(zs_m.cols()) + ", zs_e " +
                                      std::to_string(zs_e.rows()) + "x" + std::to_string(zs_e.cols()) +
                                      ", zt_e " + std::to_string(zt_e.rows()) + "x" +
                                      std::to_string(zt_e.cols()));
  }
  if (zt_e.cols() == 0) fail(ErrorCode::kEmptyInput, "anchor triple has zero dimension");
}

std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::kFD: return "FD";
    case Objective::kED: return "ED";
    case Objective::kSD: return "SD";
    case Objective::kMCL: return "MCL";
    case Objective::kDR: return "DR";
  }
  return "?";
}

std::optional<Objective> parse_objective(std::string_view name) {
  for (Objective o : kAllObjectives) {
    if (objective_name(o) == name) return o;
  }
  return std::nullopt;
}

ObjectiveWeights ObjectiveWeights::only(Objective o, double weight) {
  ObjectiveWeights w;
  w[o] = weight;
  return w;
}

void ObjectiveWeights::validate() const {
  bool any = false;
  for (Objective o : kAllObjectives) {
    const double w = (*this)[o];
    if (!std::isfinite(w) || w < 0.0) {
      fail(ErrorCode::kBadConfig, "weight for " + std::string(objective_name(o)) + " must be >= 0");
    }
    any = any || w > 0.0;
  }
  if (!any) fail(ErrorCode::kBadConfig, "at least one objective weight must be positive");
}

LossReport fd_loss(const AnchorTriple& t) {
  t.validate();
  const std::size_t b = t.batch_size();
  const std::size_t d = t.zt_e.cols();
  LossReport r{0.0, Matrix(b, d), Matrix(b, d)};
  const double scale = 2.0 / static_cast<double>(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto s = t.zs_m.row(i);
    const auto te = t.zt_e.row(i);
    auto g = r.grad_zs_m.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = s[c] - te[c];
      total += diff * diff;
      g[c] = scale * diff;
    }
  }
  r.value = total / static_cast<double>(b);
  return r;
}

LossReport ed_loss(const AnchorTriple& t) {
  t.validate();
  const std::size_t b = t.batch_size();
  const std::size_t d = t.zt_e.cols();
  LossReport r{0.0, Matrix(b, d), Matrix(b, d)};
  const double scale = 2.0 / static_cast<double>(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto sm = t.zs_m.row(i);
    const auto se = t.zs_e.row(i);
    const auto te = t.zt_e.row(i);
    auto gm = r.grad_zs_m.row(i);
    auto ge = r.grad_zs_e.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double dm = sm[c] - te[c];
      const double de = se[c] - te[c];
      total += dm * dm + de * de;
      gm[c] = scale * dm;
      ge[c] = scale * de;
    }
  }
  r.value = total / static_cast<double>(b);
  return r;
}

LossReport sd_loss(const AnchorTriple& t, double tau) {
  t.validate();
  require_temperature(tau, "SD temperature");
  const std::size_t b = t.batch_size();
  const std::size_t d = t.zt_e.cols();
  LossReport r{0.0, Matrix(b, d), Matrix(b, d)};
  const double scale = 1.0 / (static_cast<double>(b) * tau);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const Distribution p_teacher = softmax(t.zt_e.row(i), tau);
    const Vector logp_student = log_softmax(t.zs_m.row(i), tau);
    auto g = r.grad_zs_m.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      if (p_teacher[c] != 0.0) total -= p_teacher[c] * logp_student[c];
      g[c] = scale * (std::exp(logp_student[c]) - p_teacher[c]);
    }
  }
  r.value = total / static_cast<double>(b);
  return r;
}

LossReport mcl_loss(const AnchorTriple& t, double tau, Similarity sim) {
  t.validate();
  require_temperature(tau, "MCL temperature");
  const std::size_t b = t.batch_size();
  Matrix positives(b, b);
  for (std::size_t i = 0; i < b; ++i) positives(i, i) = 1.0;

  RowLosses english = similarity_cross_entropy(t.zs_e, t.zt_e, positives, tau, sim);
  RowLosses multi = similarity_cross_entropy(t.zs_m, t.zt_e, positives, tau, sim);

  const double scale = 1.0 / (2.0 * static_cast<double>(b));
  LossReport r;
  r.value = (sum(english.losses) + sum(multi.losses)) * scale;
  r.grad_zs_e = std::move(english.grad);
  r.grad_zs_e *= scale;
  r.grad_zs_m = std::move(multi.grad);
  r.grad_zs_m *= scale;
  return r;
}

Matrix dr_distribution(const Matrix& z, const Matrix& queue, double tau, Similarity sim) {
  require_temperature(tau, "DR temperature");
  if (queue.rows() == 0) fail(ErrorCode::kEmptyQueue, "DR distribution needs a non-empty queue");
  if (queue.cols() != z.cols()) fail(ErrorCode::kDimMismatch, "queue dim != embedding dim");
  Matrix scores = pairwise_similarity(z, queue, sim);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const Distribution p = softmax(scores.row(i), tau);
    std::ranges::copy(p, scores.row(i).begin());
  }
  return scores;
}

LossReport dr_loss(const AnchorTriple& t, const Matrix& queue, double tau_teacher,
                   double tau_student, Similarity sim) {
  t.validate();
  require_temperature(tau_student, "DR student temperature");
  const Matrix reference = dr_distribution(t.zt_e, queue, tau_teacher, sim);

  RowLosses control = similarity_cross_entropy(t.zs_e, queue, reference, tau_student, sim);
  RowLosses generalize = similarity_cross_entropy(t.zs_m, queue, reference, tau_student, sim);

  const double scale = 1.0 / (2.0 * static_cast<double>(t.batch_size()));
  LossReport r;
  r.value = (sum(control.losses) + sum(generalize.losses)) * scale;
  r.grad_zs_e = std::move(control.grad);
  r.grad_zs_e *= scale;
  r.grad_zs_m = std::move(generalize.grad);
  r.grad_zs_m *= scale;
  return r;
}

CombinedLoss combined_loss(const AnchorTriple& t, const Matrix* queue,
                           const ObjectiveWeights& weights, const LossConfig& cfg) {
  weights.validate();
  t.validate();
  if (weights.active(Objective::kDR) && (queue == nullptr || queue->rows() == 0)) {
    fail(ErrorCode::kEmptyQueue, "DR weight is positive but the queue is empty");
  }

  CombinedLoss out;
  bool first = true;
  for (Objective o : kAllObjectives) {
    const double w = weights[o];
    if (!(w > 0.0)) continue;
    LossReport part;
    switch (o) {
      case Objective::kFD: part = fd_loss(t); break;
      case Objective::kED: part = ed_loss(t); break;
      case Objective::kSD: part = sd_loss(t, cfg.tau_sd); break;
      case Objective::kMCL: part = mcl_loss(t, cfg.tau_mcl, cfg.similarity); break;
      case Objective::kDR:
        part = dr_loss(t, *queue, cfg.tau_teacher, cfg.tau_student, cfg.similarity);
        break;
    }
    out.components[static_cast<std::size_t>(o)] = part.value;
    part.value *= w;
    part.grad_zs_m *= w;
    part.grad_zs_e *= w;
    if (first) {
      out.total = std::move(part);
      first = false;
    } else {
      out.total.value += part.value;
      out.total.grad_zs_m += part.grad_zs_m;
      out.total.grad_zs_e += part.grad_zs_e;
    }
  }
  return out;
}

}  // namespace kdalign
