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
#include <initializer_list>
#include <span>
#include <vector>

namespace kdalign {

using Vector = std::vector<double>;

// Categorical distribution: non-negative entries summing to one.
using Distribution = std::vector<double>;

// Dense row-major matrix of doubles. One row per embedding.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  // Stacks the given rows of `source` in order.
  static Matrix gather_rows(const Matrix& source, std::span<const std::size_t> indices);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(double scale);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Similarity { kCosine, kDot };

bool all_finite(std::span<const double> values);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Throws ZeroVector on a zero-norm argument, DimMismatch on unequal lengths.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Temperature softmax, max-subtracted. Throws BadTemperature when tau <= 0.
Distribution softmax(std::span<const double> v, double tau);
Vector log_softmax(std::span<const double> v, double tau);

// -sum p log q, with q clamped below at kLogFloor.
double cross_entropy(std::span<const double> p, std::span<const double> q);
double entropy(std::span<const double> p);

inline constexpr double kLogFloor = 1e-12;

Matrix normalize_rows(const Matrix& m);
Matrix pairwise_cosine(const Matrix& a, const Matrix& b);
Matrix pairwise_dot(const Matrix& a, const Matrix& b);
Matrix pairwise_similarity(const Matrix& a, const Matrix& b, Similarity sim);

void require_temperature(double tau, const char* what);

}  // namespace kdalign
