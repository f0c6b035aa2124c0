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

#include "kdalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "kdalign/error.hpp"
#include "kdalign/parallel.hpp"

namespace kdalign {

void RetrievalTask::validate() const {
  if (queries.rows() == 0 || gallery.rows() == 0) fail(ErrorCode::kEmptyInput, "empty retrieval task");
  if (queries.cols() != gallery.cols()) fail(ErrorCode::kDimMismatch, "query/gallery dim mismatch");
  if (gold.size() != queries.rows()) fail(ErrorCode::kDimMismatch, "one gold index per query required");
  for (std::size_t g : gold) {
    if (g >= gallery.rows()) fail(ErrorCode::kBadConfig, "gold index out of range");
  }
}

std::vector<std::size_t> gold_ranks(const RetrievalTask& task) {
  task.validate();
  const Matrix scores = pairwise_cosine(task.queries, task.gallery);
  std::vector<std::size_t> ranks(task.queries.rows());
  parallel_for(ranks.size(), [&](std::size_t i) {
    const auto s = scores.row(i);
    const std::size_t g = task.gold[i];
    const double target = s[g];
    std::size_t rank = 1;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] > target || (s[j] == target && j < g)) ++rank;
    }
    ranks[i] = rank;
  });
  return ranks;
}

namespace {
void check_k(std::size_t k, std::size_t gallery) {
  if (k < 1 || k > gallery) {
    fail(ErrorCode::kBadK, "k=" + std::to_string(k) + " outside [1, " + std::to_string(gallery) + "]");
  }
}
}  // namespace

double recall_from_ranks(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) fail(ErrorCode::kEmptyInput, "no ranks");
  const auto hits = std::ranges::count_if(ranks, [k](std::size_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr_from_ranks(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) fail(ErrorCode::kEmptyInput, "no ranks");
  double s = 0.0;
  for (std::size_t r : ranks) {
    if (r <= k) s += 1.0 / static_cast<double>(r);
  }
  return s / static_cast<double>(ranks.size());
}

double recall_at_k(const RetrievalTask& task, std::size_t k) {
  check_k(k, task.gallery.rows());
  return recall_from_ranks(gold_ranks(task), k);
}

double mrr_at_k(const RetrievalTask& task, std::size_t k) {
  check_k(k, task.gallery.rows());
  return mrr_from_ranks(gold_ranks(task), k);
}

double vqa_accuracy(std::span<const VqaInstance> instances) {
  if (instances.empty()) fail(ErrorCode::kEmptyInput, "no VQA instances");
  std::size_t correct = 0;
  for (const auto& inst : instances) {
    if (inst.candidates.rows() < 2) fail(ErrorCode::kBadConfig, "VQA needs at least two candidates");
    if (inst.gold >= inst.candidates.rows()) fail(ErrorCode::kBadConfig, "VQA gold out of range");
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < inst.candidates.rows(); ++c) {
      const double s = cosine_sim(inst.image, inst.candidates.row(c));
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    if (best == inst.gold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t nearest(std::span<const double> p, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  if (k == 0) fail(ErrorCode::kBadConfig, "k-means needs k >= 1");
  const std::size_t n = points.rows();
  if (n == 0) fail(ErrorCode::kEmptyInput, "k-means on no points");
  const std::size_t dim = points.cols();
  std::mt19937_64 rng(seed);

  KMeansResult out;
  out.centroids = Matrix(k, dim);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::ranges::copy(points.row(first), out.centroids.row(0).begin());
  Vector d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), out.centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::ranges::copy(points.row(pick), out.centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), out.centroids.row(c)));
    }
  }

  out.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) out.assignment[i] = nearest(points.row(i), out.centroids);
  for (out.iterations = 1; out.iterations <= max_iters; ++out.iterations) {
    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = out.assignment[i];
      ++counts[c];
      auto s = sums.row(c);
      const auto p = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto cen = out.centroids.row(c);
      const auto s = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) cen[j] = s[j] / static_cast<double>(counts[c]);
    }
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(points.row(i), out.centroids);
      if (c != out.assignment[i]) {
        out.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }
  out.iterations = std::min(out.iterations, max_iters);
  return out;
}

double purity_of_assignment(std::span<const std::size_t> assignment,
                            std::span<const std::size_t> labels) {
  if (assignment.size() != labels.size()) fail(ErrorCode::kBadConfig, "assignment/label length mismatch");
  if (assignment.empty()) fail(ErrorCode::kEmptyInput, "purity of no points");
  std::map<std::size_t, std::map<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::size_t majority = 0;
  for (const auto& [cluster, by_label] : counts) {
    std::size_t best = 0;
    for (const auto& [label, count] : by_label) best = std::max(best, count);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(labels.size());
}

double purity(const Matrix& embeddings, std::span<const std::size_t> labels,
              std::size_t n_clusters, std::uint64_t seed) {
  if (n_clusters == 0) fail(ErrorCode::kBadConfig, "purity needs n_clusters >= 1");
  if (embeddings.rows() == 0) fail(ErrorCode::kEmptyInput, "purity of no points");
  if (labels.size() != embeddings.rows()) fail(ErrorCode::kBadConfig, "one label per row required");
  const KMeansResult km = kmeans(normalize_rows(embeddings), n_clusters, seed);
  return purity_of_assignment(km.assignment, labels);
}

Matrix pca_2d(const Matrix& points) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  if (n == 0 || dim == 0) fail(ErrorCode::kEmptyInput, "PCA of empty matrix");
  Eigen::MatrixXd x(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) x(i, j) = points(i, j);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<std::size_t>(1, n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::MatrixXd& vecs = solver.eigenvectors();

  Matrix out(n, 2);
  for (std::size_t axis = 0; axis < std::min<std::size_t>(2, dim); ++axis) {
    Eigen::VectorXd v = vecs.col(static_cast<Eigen::Index>(dim - 1 - axis));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    const Eigen::VectorXd proj = x * v;
    for (std::size_t i = 0; i < n; ++i) out(i, axis) = proj(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace kdalign
