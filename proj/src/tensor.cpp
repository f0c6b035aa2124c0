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

#include "kdalign/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kdalign/error.hpp"
#include "kdalign/parallel.hpp"

namespace kdalign {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorCode::kDimMismatch, "matrix data length " + std::to_string(data_.size()) +
                                      " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t d = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * d);
  for (const auto& r : rows) {
    if (r.size() != d) fail(ErrorCode::kDimMismatch, "ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(n, d, std::move(data));
}

Matrix Matrix::gather_rows(const Matrix& source, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), source.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= source.rows()) fail(ErrorCode::kDimMismatch, "row index out of range");
    std::ranges::copy(source.row(indices[i]), out.row(i).begin());
  }
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) fail(ErrorCode::kDimMismatch, "matrix += shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double scale) {
  for (double& x : data_) x *= scale;
  return *this;
}

bool all_finite(std::span<const double> values) {
  return std::ranges::all_of(values, [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::kDimMismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::kDimMismatch, "cosine_sim: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::kZeroVector, "cosine_sim: zero-norm input");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

void require_temperature(double tau, const char* what) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail(ErrorCode::kBadTemperature, std::string(what) + " must be positive, got " + std::to_string(tau));
  }
}

Vector log_softmax(std::span<const double> v, double tau) {
  require_temperature(tau, "softmax temperature");
  if (v.empty()) fail(ErrorCode::kEmptyInput, "softmax of empty vector");
  const double vmax = *std::ranges::max_element(v);
  double sum = 0.0;
  for (double x : v) sum += std::exp((x - vmax) / tau);
  const double log_z = std::log(sum);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - vmax) / tau - log_z;
  return out;
}

Distribution softmax(std::span<const double> v, double tau) {
  require_temperature(tau, "softmax temperature");
  if (v.empty()) fail(ErrorCode::kEmptyInput, "softmax of empty vector");
  const double vmax = *std::ranges::max_element(v);
  Distribution out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - vmax) / tau);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) fail(ErrorCode::kDimMismatch, "cross_entropy: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    s -= p[i] * std::log(std::max(q[i], kLogFloor));
  }
  return s;
}

double entropy(std::span<const double> p) { return cross_entropy(p, p); }

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = l2_norm(m.row(r));
    if (n == 0.0) fail(ErrorCode::kZeroVector, "zero-norm row " + std::to_string(r));
    for (double& x : out.row(r)) x /= n;
  }
  return out;
}

Matrix pairwise_dot(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::kDimMismatch, "pairwise: column mismatch");
  Matrix out(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t i) {
    const auto ai = a.row(i);
    auto oi = out.row(i);
    const std::size_t d = ai.size();
    std::size_t j = 0;
    // Four gallery rows per pass. Each sum still runs over c in order.
    for (; j + 4 <= b.rows(); j += 4) {
      const double* b0 = b.row(j).data();
      const double* b1 = b0 + d;
      const double* b2 = b1 + d;
      const double* b3 = b2 + d;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        s0 += ai[c] * b0[c];
        s1 += ai[c] * b1[c];
        s2 += ai[c] * b2[c];
        s3 += ai[c] * b3[c];
      }
      oi[j] = s0;
      oi[j + 1] = s1;
      oi[j + 2] = s2;
      oi[j + 3] = s3;
    }
    for (; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += ai[c] * bj[c];
      oi[j] = s;
    }
  });
  return out;
}

Matrix pairwise_cosine(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::kDimMismatch, "pairwise_cosine: column mismatch");
  Matrix out = pairwise_dot(normalize_rows(a), normalize_rows(b));
  for (double& x : out.data()) x = std::clamp(x, -1.0, 1.0);
  return out;
}

Matrix pairwise_similarity(const Matrix& a, const Matrix& b, Similarity sim) {
  return sim == Similarity::kCosine ? pairwise_cosine(a, b) : pairwise_dot(a, b);
}

}  // namespace kdalign
