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

#include "kdalign/queue.hpp"

#include <algorithm>
#include <string>

#include "kdalign/error.hpp"

namespace kdalign {

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity == 0) fail(ErrorCode::kBadConfig, "queue capacity must be >= 1");
  if (dim == 0) fail(ErrorCode::kBadConfig, "queue dim must be >= 1");
}

void NegativeQueue::push_batch(const Matrix& batch) {
  if (batch.rows() == 0) return;
  if (batch.cols() != dim_) {
    fail(ErrorCode::kDimMismatch, "queue dim " + std::to_string(dim_) + " but batch has " +
                                      std::to_string(batch.cols()) + " columns");
  }
  if (!all_finite(batch.data())) fail(ErrorCode::kNonFiniteValue, "queue rows must be finite");

  // Only the newest `capacity_` rows of an oversized batch can survive.
  const std::size_t skip = batch.rows() > capacity_ ? batch.rows() - capacity_ : 0;
  for (std::size_t r = skip; r < batch.rows(); ++r) {
    const auto src = batch.row(r);
    if (len_ < capacity_) {
      storage_.insert(storage_.end(), src.begin(), src.end());
      ++len_;
    } else {
      std::ranges::copy(src, storage_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
      head_ = (head_ + 1) % capacity_;
    }
  }
}

Matrix NegativeQueue::snapshot() const {
  Matrix out(len_, dim_);
  auto dst = out.data();
  // Oldest-first: [head_, len_) then [0, head_).
  const auto split = storage_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_);
  auto it = std::copy(split, storage_.end(), dst.begin());
  std::copy(storage_.begin(), split, it);
  return out;
}

}  // namespace kdalign
