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

// MKDE embedding files. Layout, little-endian throughout:
//   magic "MKDE" | version u32 (= 1) | dtype u8 (0 = f32, 1 = f64)
//   | rows u32 | dim u32 | rows * dim values, row-major

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "kdalign/tensor.hpp"

namespace kdalign {

enum class Dtype : std::uint8_t { kF32 = 0, kF64 = 1 };

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

std::string encode_embeddings(const Matrix& m, Dtype dtype);
// BadMagic, BadVersion, BadDtype, TruncatedFile (short or overlong payload),
// DimOverflow (rows * dim does not fit in memory).
Matrix decode_embeddings(std::string_view bytes);

void write_embeddings(const std::filesystem::path& path, const Matrix& m, Dtype dtype);
Matrix read_embeddings(const std::filesystem::path& path);

}  // namespace kdalign
