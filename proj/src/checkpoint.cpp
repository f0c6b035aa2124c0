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

#include "kdalign/checkpoint.hpp"

#include <string>

#include "binary_io.hpp"
#include "kdalign/error.hpp"

namespace kdalign {
namespace {

constexpr std::string_view kMagic = "KDCK";

void put_layers(detail::ByteWriter& w, const std::vector<AffineLayer>& layers) {
  for (const auto& l : layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    w.f64s(l.weight.data());
    w.u32(static_cast<std::uint32_t>(l.bias.size()));
    w.f64s(l.bias);
  }
}

std::vector<AffineLayer> get_layers(detail::ByteReader& r, std::size_t count) {
  std::vector<AffineLayer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    if (rows * cols * 8 > r.remaining()) fail(ErrorCode::kBadCheckpoint, "layer larger than file");
    AffineLayer l{Matrix(rows, cols), {}};
    r.f64s(l.weight.data());
    const std::size_t bias = r.u32();
    if (bias != cols) fail(ErrorCode::kBadCheckpoint, "bias length does not match layer width");
    l.bias.resize(bias);
    r.f64s(l.bias);
    layers.push_back(std::move(l));
  }
  return layers;
}

void check_layout(const StudentParams& p) {
  auto bad = [] { fail(ErrorCode::kBadCheckpoint, "layer shapes do not match architecture"); };
  if (p.arch == Arch::kLinear) {
    if (p.layers.size() != 1 || p.layers[0].weight.rows() != p.in_dim ||
        p.layers[0].weight.cols() != p.out_dim) {
      bad();
    }
  } else {
    if (p.layers.size() != 2 || p.layers[0].weight.rows() != p.in_dim ||
        p.layers[0].weight.cols() != p.hidden_dim || p.layers[1].weight.rows() != p.hidden_dim ||
        p.layers[1].weight.cols() != p.out_dim) {
      bad();
    }
  }
}

bool same_layout(const std::vector<AffineLayer>& a, const std::vector<AffineLayer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].weight.same_shape(b[i].weight) || a[i].bias.size() != b[i].bias.size()) return false;
  }
  return true;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  const auto& p = c.params;
  w.u8(static_cast<std::uint8_t>(p.arch));
  w.u32(static_cast<std::uint32_t>(p.in_dim));
  w.u32(static_cast<std::uint32_t>(p.hidden_dim));
  w.u32(static_cast<std::uint32_t>(p.out_dim));
  w.u32(static_cast<std::uint32_t>(p.layers.size()));
  put_layers(w, p.layers);

  const auto& o = c.optimizer;
  w.u64(o.step);
  w.f64(o.config.base_lr);
  w.u64(o.config.warmup_steps);
  w.f64(o.config.beta1);
  w.f64(o.config.beta2);
  w.f64(o.config.eps);
  put_layers(w, o.first_moment);
  put_layers(w, o.second_moment);

  w.u32(c.queue_capacity);
  w.u32(static_cast<std::uint32_t>(c.queue_rows.cols()));
  w.u32(static_cast<std::uint32_t>(c.queue_rows.rows()));
  w.f64s(c.queue_rows.data());

  w.u64(c.sampler.epoch);
  w.u64(c.sampler.position);
  w.blob(c.sampler.epoch_engine);
  w.u64(c.dataset_rows);
  w.blob(c.config_json);
  return w.buffer();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes, ErrorCode::kBadCheckpoint);
  if (r.bytes(4) != kMagic) fail(ErrorCode::kBadCheckpoint, "bad magic, not a KDCK checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kBadCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  auto& p = c.params;
  const std::uint8_t arch = r.u8();
  if (arch > 1) fail(ErrorCode::kBadCheckpoint, "unknown architecture tag");
  p.arch = static_cast<Arch>(arch);
  p.in_dim = r.u32();
  p.hidden_dim = r.u32();
  p.out_dim = r.u32();
  const std::size_t n_layers = r.u32();
  if (n_layers > 2) fail(ErrorCode::kBadCheckpoint, "too many layers");
  p.layers = get_layers(r, n_layers);
  check_layout(p);

  auto& o = c.optimizer;
  o.step = r.u64();
  o.config.base_lr = r.f64();
  o.config.warmup_steps = r.u64();
  o.config.beta1 = r.f64();
  o.config.beta2 = r.f64();
  o.config.eps = r.f64();
  o.first_moment = get_layers(r, n_layers);
  o.second_moment = get_layers(r, n_layers);
  if (!same_layout(o.first_moment, p.layers) || !same_layout(o.second_moment, p.layers)) {
    fail(ErrorCode::kBadCheckpoint, "optimizer moments do not match parameters");
  }

  c.queue_capacity = r.u32();
  const std::size_t qdim = r.u32();
  const std::size_t qlen = r.u32();
  if (qlen > c.queue_capacity || qlen * qdim * 8 > r.remaining()) {
    fail(ErrorCode::kBadCheckpoint, "queue section inconsistent");
  }
  c.queue_rows = Matrix(qlen, qdim);
  r.f64s(c.queue_rows.data());

  c.sampler.epoch = r.u64();
  c.sampler.position = r.u64();
  c.sampler.epoch_engine = r.blob();
  c.dataset_rows = r.u64();
  c.config_json = r.blob();
  if (r.remaining() != 0) fail(ErrorCode::kBadCheckpoint, "trailing bytes after checkpoint");
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  detail::write_file(path, encode_checkpoint(c));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

}  // namespace kdalign
