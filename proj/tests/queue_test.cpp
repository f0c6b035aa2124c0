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

#include <deque>
#include <random>
#include <vector>

#include "kdalign/error.hpp"
#include "kdalign/queue.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace kdalign {
namespace {

using testing::thrown_code;

Matrix rows_of(std::initializer_list<std::initializer_list<double>> rows) { return Matrix::from_rows(rows); }

TEST(NegativeQueue, Construction) {
  NegativeQueue q(3, 2);
  EXPECT_EQ(q.size(), 0u);
  NegativeQueue big(65536, 768);
  EXPECT_EQ(big.size(), 0u);
  EXPECT_EQ(big.capacity(), 65536u);
  EXPECT_EQ(thrown_code([] { NegativeQueue(0, 2); }), ErrorCode::kBadConfig);
  EXPECT_EQ(thrown_code([] { NegativeQueue(2, 0); }), ErrorCode::kBadConfig);
}

TEST(NegativeQueue, FifoEviction) {
  NegativeQueue q(3, 1);
  q.push_batch(rows_of({{1}, {2}}));
  EXPECT_EQ(q.snapshot(), rows_of({{1}, {2}}));
  q.push_batch(rows_of({{3}, {4}}));
  EXPECT_EQ(q.snapshot(), rows_of({{2}, {3}, {4}}));
  EXPECT_TRUE(q.full());
}

TEST(NegativeQueue, OverflowInSinglePush) {
  NegativeQueue q(3, 2);
  q.push_batch(rows_of({{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}}));
  EXPECT_EQ(q.snapshot(), rows_of({{3, 3}, {4, 4}, {5, 5}}));
  q.push_batch(rows_of({{6, 6}}));
  EXPECT_EQ(q.snapshot(), rows_of({{4, 4}, {5, 5}, {6, 6}}));
}

TEST(NegativeQueue, SnapshotShapes) {
  NegativeQueue q(4, 2);
  const Matrix empty = q.snapshot();
  EXPECT_EQ(empty.rows(), 0u);
  EXPECT_EQ(empty.cols(), 2u);
  q.push_batch(rows_of({{1, 0}, {0, 1}}));
  EXPECT_EQ(q.snapshot(), rows_of({{1, 0}, {0, 1}}));
}

TEST(NegativeQueue, RejectsBadBatches) {
  NegativeQueue q(4, 2);
  q.push_batch(rows_of({{1, 2}}));
  EXPECT_EQ(thrown_code([&] { q.push_batch(rows_of({{1, 2, 3}})); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(thrown_code([&] { q.push_batch(rows_of({{0, 0}, {std::nan(""), 1}})); }), ErrorCode::kNonFiniteValue);
  EXPECT_EQ(q.snapshot(), rows_of({{1, 2}}));
}

TEST(NegativeQueue, MatchesListOracle) {
  std::mt19937_64 rng(40);
  std::uniform_int_distribution<std::size_t> cap_dist(1, 12), dim_dist(1, 3), batch_dist(0, 20), ops_dist(1, 30);
  std::normal_distribution<double> n01;
  for (int seq = 0; seq < 1000; ++seq) {
    const std::size_t cap = cap_dist(rng), dim = dim_dist(rng);
    NegativeQueue q(cap, dim);
    std::deque<std::vector<double>> oracle;
    const std::size_t ops = ops_dist(rng);
    for (std::size_t op = 0; op < ops; ++op) {
      const std::size_t b = batch_dist(rng);
      Matrix batch(b, dim);
      for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> row(dim);
        for (std::size_t j = 0; j < dim; ++j) batch(i, j) = row[j] = n01(rng);
        oracle.push_back(row);
        if (oracle.size() > cap) oracle.pop_front();
      }
      q.push_batch(batch);
      const Matrix snap = q.snapshot();
      ASSERT_EQ(snap.rows(), oracle.size());
      ASSERT_EQ(q.size(), oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j) ASSERT_EQ(snap(i, j), oracle[i][j]);
    }
  }
}

}  // namespace
}  // namespace kdalign
