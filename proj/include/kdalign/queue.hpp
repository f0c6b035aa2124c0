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
#include <vector>

#include "kdalign/tensor.hpp"

namespace kdalign {

// Fixed-capacity FIFO of teacher anchor embeddings. Once full, each pushed row
// evicts the oldest stored row.
class NegativeQueue {
 public:
  // BadConfig when capacity or dim is zero. Storage grows with use, so a large
  // capacity costs nothing until it is filled.
  NegativeQueue(std::size_t capacity, std::size_t dim);

  // Rows appended in order. DimMismatch on column count, NonFiniteValue on
  // NaN/Inf entries (queue left untouched in both cases).
  void push_batch(const Matrix& batch);

  // Copy of the stored rows, oldest first.
  Matrix snapshot() const;

  std::size_t size() const noexcept { return len_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  bool full() const noexcept { return len_ == capacity_; }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::size_t len_ = 0;
  std::size_t head_ = 0;  // slot of the oldest row once the buffer is full
  std::vector<double> storage_;
};

}  // namespace kdalign
