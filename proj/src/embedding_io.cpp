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

#include "kdalign/embedding_io.hpp"

#include <limits>

#include "binary_io.hpp"
#include "kdalign/error.hpp"

namespace kdalign {

namespace {
constexpr std::string_view kMagic = "MKDE";
}

std::string encode_embeddings(const Matrix& m, Dtype dtype) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (m.rows() > kMax || m.cols() > kMax) {
    fail(ErrorCode::kDimOverflow, "matrix too large for a u32 header");
  }
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kEmbeddingFormatVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  if (dtype == Dtype::kF64) {
    w.f64s(m.data());
  } else {
    for (double x : m.data()) w.f32(static_cast<float>(x));
  }
  return w.buffer();
}

Matrix decode_embeddings(std::string_view bytes) {
  detail::ByteReader r(bytes, ErrorCode::kTruncatedFile);
  if (r.bytes(4) != kMagic) fail(ErrorCode::kBadMagic, "not an MKDE embedding file");
  const std::uint32_t version = r.u32();
  if (version != kEmbeddingFormatVersion) {
    fail(ErrorCode::kBadVersion, "unsupported MKDE version " + std::to_string(version));
  }
  const std::uint8_t dtype = r.u8();
  if (dtype > 1) fail(ErrorCode::kBadDtype, "unknown dtype code " + std::to_string(dtype));
  const std::uint64_t rows = r.u32();
  const std::uint64_t dim = r.u32();
  const std::uint64_t width = dtype == 1 ? 8 : 4;
  // rows, dim < 2^32 so rows * dim < 2^64; the byte count may still overflow.
  const std::uint64_t count = rows * dim;
  if (count > std::numeric_limits<std::uint64_t>::max() / width ||
      count > std::numeric_limits<std::size_t>::max() / sizeof(double)) {
    fail(ErrorCode::kDimOverflow, "payload size overflows");
  }
  if (r.remaining() != count * width) {
    fail(ErrorCode::kTruncatedFile, "payload is " + std::to_string(r.remaining()) +
                                        " bytes, header implies " + std::to_string(count * width));
  }
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(dim));
  if (dtype == 1) {
    r.f64s(m.data());
  } else {
    for (double& x : m.data()) x = static_cast<double>(r.f32());
  }
  return m;
}

void write_embeddings(const std::filesystem::path& path, const Matrix& m, Dtype dtype) {
  detail::write_file(path, encode_embeddings(m, dtype));
}

Matrix read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(detail::read_file(path));
}

}  // namespace kdalign
