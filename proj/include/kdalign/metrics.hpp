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
#include <span>
#include <vector>

#include "kdalign/tensor.hpp"

namespace kdalign {

enum class Direction { kI2T, kT2I };

// Query i's correct answer is gallery row gold[i]. Scored by cosine similarity.
struct RetrievalTask {
  Matrix queries;
  Matrix gallery;
  std::vector<std::size_t> gold;
  Direction direction = Direction::kI2T;

  void validate() const;
};

// 1-based rank of each query's gold item: one plus the number of gallery rows
// scoring strictly higher, plus the number of equal-scoring rows with a lower
// index.
std::vector<std::size_t> gold_ranks(const RetrievalTask& task);

// BadK unless 1 <= k <= gallery size.
double recall_at_k(const RetrievalTask& task, std::size_t k);
double mrr_at_k(const RetrievalTask& task, std::size_t k);

// Same metrics from ranks computed once.
double recall_from_ranks(std::span<const std::size_t> ranks, std::size_t k);
double mrr_from_ranks(std::span<const std::size_t> ranks, std::size_t k);

struct VqaInstance {
  Vector image;
  Matrix candidates;  // one row per question+answer text embedding
  std::size_t gold = 0;
};

// Fraction of instances whose highest-cosine candidate is the gold one; the
// lowest index wins ties. EmptyInput for an empty list.
double vqa_accuracy(std::span<const VqaInstance> instances);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centroids;
  std::size_t iterations = 0;
};

// k-means++ seeding then Lloyd iterations until assignments stop changing or
// max_iters is reached. Deterministic for a given seed. An emptied cluster
// keeps its previous centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

// Clusters L2-normalized rows with k-means, then returns
// (1/N) * sum over clusters of the largest single-label count.
// BadConfig for k == 0 or label count != rows; EmptyInput for no rows.
double purity(const Matrix& embeddings, std::span<const std::size_t> labels,
              std::size_t n_clusters, std::uint64_t seed);

// Purity of a fixed clustering against labels.
double purity_of_assignment(std::span<const std::size_t> assignment,
                            std::span<const std::size_t> labels);

// Projection of the centered rows onto the two leading principal axes. Axis
// signs are fixed so each axis' largest-magnitude loading is positive.
Matrix pca_2d(const Matrix& points);

}  // namespace kdalign
