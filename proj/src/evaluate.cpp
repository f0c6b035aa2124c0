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

#include "kdalign/evaluate.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "format.hpp"
#include "json.hpp"
#include "kdalign/error.hpp"
#include "kdalign/metrics.hpp"

namespace kdalign {

using nlohmann::json;

namespace {

constexpr std::string_view kReportFormat = "kdalign-eval-report";
constexpr int kReportVersion = 1;

std::vector<std::size_t> to_rows(std::span<const std::uint32_t> ids) {
  return {ids.begin(), ids.end()};
}

std::vector<std::size_t> identity_gold(std::size_t n) {
  std::vector<std::size_t> g(n);
  std::iota(g.begin(), g.end(), 0);
  return g;
}

std::vector<std::size_t> ranks_for(const Matrix& queries, const Matrix& gallery, Direction dir) {
  RetrievalTask task{queries, gallery, identity_gold(queries.rows()), dir};
  return gold_ranks(task);
}

void check_student_fits(const Dataset& data, const StudentParams* student) {
  if (student == nullptr) return;
  if (student->in_dim != data.base_dim()) {
    fail(ErrorCode::kDimMismatch, "student input dim " + std::to_string(student->in_dim) +
                                      " != dataset base dim " + std::to_string(data.base_dim()));
  }
  if (student->out_dim != data.teacher_dim()) {
    fail(ErrorCode::kDimMismatch, "student output dim " + std::to_string(student->out_dim) +
                                      " != teacher dim " + std::to_string(data.teacher_dim()));
  }
}

json cell_to_json(const MetricCell& c, const std::vector<std::size_t>& ks) {
  json i2t = json::object(), t2i = json::object();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    i2t["R@" + std::to_string(ks[i])] = c.i2t[i];
    t2i["R@" + std::to_string(ks[i])] = c.t2i[i];
  }
  json j{{"name", c.name}, {"queries", c.queries}, {"I2T", i2t}, {"T2I", t2i},
         {"MRR", c.mrr}, {"vqa_items", c.vqa_items}};
  j["VQA"] = c.vqa ? json(*c.vqa) : json(nullptr);
  return j;
}

MetricCell cell_from_json(const json& j, const std::vector<std::size_t>& ks) {
  MetricCell c;
  c.name = j.at("name").get<std::string>();
  c.queries = j.at("queries").get<std::size_t>();
  for (std::size_t k : ks) {
    c.i2t.push_back(j.at("I2T").at("R@" + std::to_string(k)).get<double>());
    c.t2i.push_back(j.at("T2I").at("R@" + std::to_string(k)).get<double>());
  }
  c.mrr = j.at("MRR").get<Vector>();
  c.vqa_items = j.at("vqa_items").get<std::size_t>();
  if (!j.at("VQA").is_null()) c.vqa = j.at("VQA").get<double>();
  return c;
}

std::string csv_cell(const std::optional<double>& v) {
  return v ? detail::format_double(*v) : std::string();
}

}  // namespace

Matrix text_embeddings(const Dataset& data, const StudentParams* student, const std::string& lang,
                       std::span<const std::uint32_t> ids) {
  const auto rows = to_rows(ids);
  if (student == nullptr) {
    auto it = data.teacher_text.find(lang);
    if (it == data.teacher_text.end()) {
      fail(ErrorCode::kBadConfig, "no teacher_text embeddings for language '" + lang + "'");
    }
    return Matrix::gather_rows(it->second, rows);
  }
  return student_embed(*student, Matrix::gather_rows(data.student_base.at(lang), rows));
}

double multilingual_i2t_recall(const Dataset& data, const StudentParams* student,
                               const std::string& split, std::size_t k) {
  check_student_fits(data, student);
  const auto& ids = data.manifest.split(split);
  auto langs = data.manifest.non_anchor_languages();
  if (langs.empty()) langs.push_back(data.manifest.anchor_language);
  const Matrix images = Matrix::gather_rows(data.image, to_rows(ids));
  std::vector<std::size_t> ranks;
  for (const auto& lang : langs) {
    const auto r = ranks_for(images, text_embeddings(data, student, lang, ids), Direction::kI2T);
    ranks.insert(ranks.end(), r.begin(), r.end());
  }
  return recall_from_ranks(ranks, k);
}

MetricCell aggregate_cells(const std::string& name, std::span<const MetricCell> cells) {
  if (cells.empty()) fail(ErrorCode::kEmptyInput, "no cells to aggregate");
  MetricCell out;
  out.name = name;
  out.i2t.assign(cells[0].i2t.size(), 0.0);
  out.t2i.assign(cells[0].t2i.size(), 0.0);
  out.mrr.assign(cells[0].mrr.size(), 0.0);
  double vqa_sum = 0.0;
  for (const auto& c : cells) {
    out.queries += c.queries;
    const auto w = static_cast<double>(c.queries);
    for (std::size_t i = 0; i < out.i2t.size(); ++i) out.i2t[i] += w * c.i2t[i];
    for (std::size_t i = 0; i < out.t2i.size(); ++i) out.t2i[i] += w * c.t2i[i];
    for (std::size_t i = 0; i < out.mrr.size(); ++i) out.mrr[i] += w * c.mrr[i];
    if (c.vqa) {
      out.vqa_items += c.vqa_items;
      vqa_sum += static_cast<double>(c.vqa_items) * *c.vqa;
    }
  }
  const auto total = static_cast<double>(out.queries);
  for (double& v : out.i2t) v /= total;
  for (double& v : out.t2i) v /= total;
  for (double& v : out.mrr) v /= total;
  if (out.vqa_items > 0) out.vqa = vqa_sum / static_cast<double>(out.vqa_items);
  return out;
}

EvalReport evaluate(const Dataset& data, const StudentParams* student, const std::string& split,
                    const EvalOptions& options) {
  check_student_fits(data, student);
  const auto& m = data.manifest;
  const auto& ids = m.split(split);
  if (ids.empty()) fail(ErrorCode::kEmptyInput, "split '" + split + "' is empty");
  const Matrix images = Matrix::gather_rows(data.image, to_rows(ids));
  const std::size_t gallery = ids.size();

  EvalReport r;
  r.split = split;
  r.source = student ? "student" : "teacher";
  r.name = r.source;
  r.anchor_language = m.anchor_language;
  for (std::size_t k : {1, 5, 10}) {
    if (k <= gallery) r.ks.push_back(k);
  }
  r.mrr_max_k = std::min(options.mrr_max_k, gallery);

  const std::vector<VqaItem>* vqa = nullptr;
  if (auto it = m.vqa.find(split); it != m.vqa.end() && !it->second.empty()) vqa = &it->second;

  Matrix all_text(0, data.teacher_dim());
  std::vector<double> stacked;
  std::vector<std::size_t> labels;
  for (std::size_t li = 0; li < m.languages.size(); ++li) {
    const std::string& lang = m.languages[li];
    const Matrix text = text_embeddings(data, student, lang, ids);
    const auto i2t = ranks_for(images, text, Direction::kI2T);
    const auto t2i = ranks_for(text, images, Direction::kT2I);

    MetricCell cell;
    cell.name = lang;
    cell.queries = ids.size();
    for (std::size_t k : r.ks) {
      cell.i2t.push_back(recall_from_ranks(i2t, k));
      cell.t2i.push_back(recall_from_ranks(t2i, k));
    }
    for (std::size_t k = 1; k <= r.mrr_max_k; ++k) cell.mrr.push_back(mrr_from_ranks(i2t, k));

    if (vqa != nullptr) {
      std::vector<VqaInstance> instances;
      instances.reserve(vqa->size());
      for (const auto& item : *vqa) {
        const auto row = data.image.row(item.image);
        instances.push_back({Vector(row.begin(), row.end()),
                             text_embeddings(data, student, lang, item.candidates), item.gold});
      }
      cell.vqa = vqa_accuracy(instances);
      cell.vqa_items = instances.size();
    }
    r.languages.push_back(std::move(cell));

    stacked.insert(stacked.end(), text.data().begin(), text.data().end());
    for (std::uint32_t id : ids) {
      labels.push_back(li);
      r.pca_ids.push_back(id);
      r.pca_languages.push_back(lang);
    }
  }
  all_text = Matrix(labels.size(), data.teacher_dim(), std::move(stacked));

  for (const auto& c : r.languages) {
    if (c.name == m.anchor_language) {
      r.en = c;
      r.en.name = "En";
    }
  }
  std::vector<MetricCell> others;
  for (const auto& c : r.languages) {
    if (c.name != m.anchor_language) others.push_back(c);
  }
  if (!others.empty()) r.mul = aggregate_cells("Mul", others);

  std::vector<std::size_t> subset(labels.size());
  std::iota(subset.begin(), subset.end(), 0);
  if (subset.size() > options.purity_max_points) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(subset.begin(), subset.end(), rng);
    subset.resize(options.purity_max_points);
    std::ranges::sort(subset);
  }
  std::vector<std::size_t> sub_labels;
  for (std::size_t i : subset) sub_labels.push_back(labels[i]);
  r.purity_clusters = m.languages.size();
  r.purity_points = subset.size();
  r.purity = purity(Matrix::gather_rows(all_text, subset), sub_labels, r.purity_clusters, options.seed);

  r.pca = pca_2d(all_text);
  return r;
}

std::string report_to_json(const EvalReport& r) {
  json langs = json::array();
  for (const auto& c : r.languages) langs.push_back(cell_to_json(c, r.ks));
  json j{{"format", kReportFormat},
         {"version", kReportVersion},
         {"name", r.name},
         {"split", r.split},
         {"source", r.source},
         {"anchor_language", r.anchor_language},
         {"ks", r.ks},
         {"mrr_max_k", r.mrr_max_k},
         {"languages", langs},
         {"purity", {{"value", r.purity}, {"n_points", r.purity_points}, {"n_clusters", r.purity_clusters}}}};
  j["aggregate"]["En"] = cell_to_json(r.en, r.ks);
  j["aggregate"]["Mul"] = r.mul ? cell_to_json(*r.mul, r.ks) : json(nullptr);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != kReportFormat || j.value("version", 0) != kReportVersion) {
      fail(ErrorCode::kBadConfig, "not a kdalign evaluation report (format/version mismatch)");
    }
    EvalReport r;
    r.name = j.at("name").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.anchor_language = j.at("anchor_language").get<std::string>();
    r.ks = j.at("ks").get<std::vector<std::size_t>>();
    r.mrr_max_k = j.at("mrr_max_k").get<std::size_t>();
    for (const auto& c : j.at("languages")) r.languages.push_back(cell_from_json(c, r.ks));
    r.en = cell_from_json(j.at("aggregate").at("En"), r.ks);
    if (!j.at("aggregate").at("Mul").is_null()) r.mul = cell_from_json(j.at("aggregate").at("Mul"), r.ks);
    r.purity = j.at("purity").at("value").get<double>();
    r.purity_points = j.at("purity").at("n_points").get<std::size_t>();
    r.purity_clusters = j.at("purity").at("n_clusters").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadConfig, std::string("malformed evaluation report: ") + e.what());
  }
}

std::string report_table_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "language,queries";
  for (std::size_t k : r.ks) os << ",I2T_R@" << k;
  for (std::size_t k : r.ks) os << ",T2I_R@" << k;
  os << ",VQA,vqa_items\n";
  auto row = [&](const MetricCell& c) {
    os << c.name << ',' << c.queries;
    for (double v : c.i2t) os << ',' << detail::format_double(v);
    for (double v : c.t2i) os << ',' << detail::format_double(v);
    os << ',' << csv_cell(c.vqa) << ',' << c.vqa_items << '\n';
  };
  for (const auto& c : r.languages) row(c);
  row(r.en);
  if (r.mul) row(*r.mul);
  return os.str();
}

std::string report_mrr_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "language,k,mrr\n";
  auto rows = [&](const MetricCell& c) {
    for (std::size_t k = 0; k < c.mrr.size(); ++k) {
      os << c.name << ',' << k + 1 << ',' << detail::format_double(c.mrr[k]) << '\n';
    }
  };
  for (const auto& c : r.languages) rows(c);
  rows(r.en);
  if (r.mul) rows(*r.mul);
  return os.str();
}

std::string report_pca_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "id,language,x,y\n";
  for (std::size_t i = 0; i < r.pca_ids.size(); ++i) {
    os << r.pca_ids[i] << ',' << r.pca_languages[i] << ',' << detail::format_double(r.pca(i, 0))
       << ',' << detail::format_double(r.pca(i, 1)) << '\n';
  }
  return os.str();
}

void write_report_files(const EvalReport& r, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  detail::write_file(out_dir / "report.json", report_to_json(r));
  detail::write_file(out_dir / "table.csv", report_table_csv(r));
  detail::write_file(out_dir / "mrr.csv", report_mrr_csv(r));
  detail::write_file(out_dir / "pca.csv", report_pca_csv(r));
}

EvalReport read_report(const std::filesystem::path& path) {
  return report_from_json(detail::read_file(path));
}

ComparisonTable compare_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) fail(ErrorCode::kBadConfig, "no reports to compare");
  const auto& first = reports.front();
  const auto language_set = [](const EvalReport& r) {
    std::set<std::string> s;
    for (const auto& c : r.languages) s.insert(c.name);
    return s;
  };
  const auto langs = language_set(first);
  for (const auto& r : reports) {
    if (language_set(r) != langs) {
      fail(ErrorCode::kBadConfig, "report '" + r.name + "' covers a different language set than '" +
                                      first.name + "'");
    }
    if (r.split != first.split) fail(ErrorCode::kBadConfig, "reports come from different splits");
    if (r.ks.empty() || r.ks.front() != 1) fail(ErrorCode::kBadConfig, "report lacks R@1");
  }

  ComparisonTable t;
  t.header = {"method", "En_I2T_R@1", "En_T2I_R@1", "Mul_I2T_R@1", "Mul_T2I_R@1", "Mul_VQA", "purity"};
  std::vector<std::vector<std::optional<double>>> values;
  for (const auto& r : reports) {
    const MetricCell* mul = r.mul ? &*r.mul : nullptr;
    values.push_back({r.en.i2t[0], r.en.t2i[0], mul ? std::optional(mul->i2t[0]) : std::nullopt,
                      mul ? std::optional(mul->t2i[0]) : std::nullopt,
                      mul ? mul->vqa : std::nullopt, r.purity});
  }
  const std::size_t n_cols = t.header.size() - 1;
  std::vector<std::optional<double>> best(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    const bool lower_better = t.header[c + 1] == "purity";
    for (const auto& row : values) {
      if (!row[c]) continue;
      if (!best[c] || (lower_better ? *row[c] < *best[c] : *row[c] > *best[c])) best[c] = row[c];
    }
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::vector<std::string> row{reports[i].name};
    for (std::size_t c = 0; c < n_cols; ++c) {
      std::string cell = csv_cell(values[i][c]);
      if (reports.size() > 1 && values[i][c] && *values[i][c] == *best[c]) cell += "*";
      row.push_back(cell.empty() ? "-" : cell);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string ComparisonTable::to_text() const {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) os << "  ";
      const std::size_t pad = width[c] - cells[c].size();
      if (c == 0) os << cells[c] << std::string(pad, ' ');
      else os << std::string(pad, ' ') << cells[c];
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) os << (c ? "," : "") << cells[c];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

}  // namespace kdalign
