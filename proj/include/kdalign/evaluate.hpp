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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kdalign/dataset.hpp"
#include "kdalign/student.hpp"
#include "kdalign/tensor.hpp"

namespace kdalign {

// Metrics for one language, or an aggregate over several.
struct MetricCell {
  std::string name;
  std::size_t queries = 0;
  Vector i2t;  // R@k for each EvalReport::ks
  Vector t2i;
  Vector mrr;  // I2T MRR@k for k = 1..EvalReport::mrr_max_k
  std::optional<double> vqa;
  std::size_t vqa_items = 0;
};

struct EvalReport {
  std::string name;
  std::string split;
  std::string source;  // "student" or "teacher"
  std::string anchor_language;
  std::vector<std::size_t> ks;
  std::size_t mrr_max_k = 0;
  std::vector<MetricCell> languages;
  MetricCell en;                  // the anchor language
  std::optional<MetricCell> mul;  // all other languages pooled
  double purity = 0.0;
  std::size_t purity_points = 0;
  std::size_t purity_clusters = 0;
  // 2-D PCA of every text embedding in the split.
  std::vector<std::uint32_t> pca_ids;
  std::vector<std::string> pca_languages;
  Matrix pca;
};

struct EvalOptions {
  std::uint64_t seed = 0;             // k-means and purity subsample
  std::size_t purity_max_points = 2048;
  std::size_t mrr_max_k = 10;
};

// Text embeddings of `ids` in `lang`: the student applied to base features, or
// the teacher's own text embeddings when `student` is null.
Matrix text_embeddings(const Dataset& data, const StudentParams* student, const std::string& lang,
                       std::span<const std::uint32_t> ids);

// Pooled image-to-text R@k over the non-anchor languages (the anchor language
// when it is the only one).
double multilingual_i2t_recall(const Dataset& data, const StudentParams* student,
                               const std::string& split, std::size_t k = 1);

// Sample-weighted mean of the cells; VQA weighted by item count.
MetricCell aggregate_cells(const std::string& name, std::span<const MetricCell> cells);

// Full suite on `split`. DimMismatch when the student does not fit the data.
EvalReport evaluate(const Dataset& data, const StudentParams* student, const std::string& split,
                    const EvalOptions& options = {});

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(std::string_view text);
// Table layout: one row per language, then En and Mul.
std::string report_table_csv(const EvalReport& r);
std::string report_mrr_csv(const EvalReport& r);
std::string report_pca_csv(const EvalReport& r);

// report.json, table.csv, mrr.csv, pca.csv
void write_report_files(const EvalReport& r, const std::filesystem::path& out_dir);
EvalReport read_report(const std::filesystem::path& path);

// Cross-method comparison of report aggregates. Best value per column is
// marked with '*' when there are at least two reports (lowest for purity,
// highest otherwise). BadConfig when reports disagree on split, language set or
// k values.
struct ComparisonTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_text() const;
  std::string to_csv() const;
};

ComparisonTable compare_reports(const std::vector<EvalReport>& reports);

}  // namespace kdalign
