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
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kdalign/embedding_io.hpp"
#include "kdalign/tensor.hpp"

namespace kdalign {

enum class AnchorSource { kText, kImage };

std::string_view anchor_source_name(AnchorSource s);
std::optional<AnchorSource> parse_anchor_source(std::string_view name);

struct LanguageFiles {
  std::string student_base;  // required
  std::string teacher_text;  // required for the anchor language when anchor_source is text
};

// Multiple-choice item: pick the candidate text closest to the image.
struct VqaItem {
  std::uint32_t image = 0;
  std::vector<std::uint32_t> candidates;
  std::uint32_t gold = 0;  // index into candidates
};

// Dataset description, stored as JSON next to the embedding files it names.
// Row r of every file is sample id r. Relative paths resolve against `root`.
struct Manifest {
  std::filesystem::path root;
  std::size_t num_rows = 0;
  std::vector<std::string> languages;
  std::string anchor_language = "en";
  AnchorSource anchor_source = AnchorSource::kText;
  std::string image_file;
  std::map<std::string, LanguageFiles> files;
  std::map<std::string, std::vector<std::uint32_t>> splits;
  std::map<std::string, std::vector<VqaItem>> vqa;

  std::vector<std::string> non_anchor_languages() const;
  const std::vector<std::uint32_t>& split(const std::string& name) const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
std::string manifest_to_json(const Manifest& m);

// Every embedding the manifest references, loaded and cross-checked.
struct Dataset {
  Manifest manifest;
  std::map<std::string, Matrix> student_base;
  std::map<std::string, Matrix> teacher_text;
  Matrix image;

  std::size_t base_dim() const;
  std::size_t teacher_dim() const;
  // Teacher-side embedding the student is aligned to, per anchor_source.
  const Matrix& teacher_anchor() const;
};

// MissingFile for absent files, RowCountMismatch when a file's row count
// differs from num_rows, DimMismatch for inconsistent widths, BadConfig for a
// malformed manifest (unknown anchor language, split ids out of range).
Dataset load_dataset(const Manifest& m);
Dataset load_dataset(const std::filesystem::path& manifest_path);

struct SyntheticSpec {
  std::size_t n_concepts = 512;
  std::size_t n_languages = 4;
  std::size_t teacher_dim = 16;
  std::size_t base_dim = 32;
  double sigma_lang = 0.5;
  double sigma_sample = 0.02;
  std::uint64_t seed = 0;
  double val_fraction = 0.125;
  double test_fraction = 0.25;
  std::size_t vqa_choices = 4;
  Dtype dtype = Dtype::kF64;

  void validate() const;
};

// Writes <lang>.base.mkde, <lang>.teacher.mkde, image.mkde and manifest.json
// into out_dir and returns the manifest.
//
// Concepts c are unit Gaussian directions in teacher_dim. The teacher text
// embedding is c, the image embedding normalize(c + sigma_sample * noise).
// Language L sees base features E c + sigma_lang * (N_L c + b_L) + sigma_sample * noise,
// where E embeds teacher_dim into the leading base_dim coordinates and the
// language-specific distortion (N_L, b_L) lives in the remaining coordinates.
// When base_dim <= teacher_dim there is no spare room and the distortion is
// applied to every coordinate.
Manifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

std::string default_language_tag(std::size_t index);

// One training batch: base features for a sampled non-anchor language and for
// the anchor language, plus the teacher anchor embeddings, all for `ids`.
struct Batch {
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> languages;  // index into Manifest::languages
  Matrix base_multi;
  Matrix base_anchor;
  Matrix teacher_anchor;
};

struct SamplerState {
  std::uint64_t epoch = 0;
  std::uint64_t position = 0;  // batches already yielded this epoch
  std::string epoch_engine;    // engine state at the start of `epoch`
};

// Endless deterministic batch stream over one split. Each epoch draws a fresh
// permutation and one non-anchor language per sample; a trailing partial batch
// is dropped.
class BatchSampler {
 public:
  BatchSampler(const Dataset& data, std::string split, std::size_t batch_size,
               std::uint64_t seed);

  Batch next();

  std::size_t batches_per_epoch() const noexcept { return batches_per_epoch_; }
  std::uint64_t epoch() const noexcept { return state_.epoch; }
  std::uint64_t position() const noexcept { return state_.position; }

  SamplerState state() const { return state_; }
  void restore(const SamplerState& state);

 private:
  void start_epoch();

  const Dataset* data_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::size_t> multi_languages_;  // indices of non-anchor languages
  std::size_t anchor_index_ = 0;
  std::size_t batch_size_;
  std::size_t batches_per_epoch_;
  std::mt19937_64 engine_;
  SamplerState state_;
  std::vector<std::uint32_t> order_;
  std::vector<std::size_t> language_plan_;
};

}  // namespace kdalign
