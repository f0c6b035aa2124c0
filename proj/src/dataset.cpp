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

#include "kdalign/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "binary_io.hpp"
#include "kdalign/error.hpp"

namespace kdalign {

using nlohmann::json;

namespace {

constexpr std::string_view kManifestFormat = "kdalign-manifest";
constexpr int kManifestVersion = 1;

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::kBadConfig, std::string("manifest missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadConfig, std::string("manifest field '") + key + "': " + e.what());
  }
}

Matrix load_checked(const std::filesystem::path& path, std::size_t rows, const std::string& what) {
  Matrix m = read_embeddings(path);
  if (m.rows() != rows) {
    fail(ErrorCode::kRowCountMismatch, what + " (" + path.string() + ") has " +
                                           std::to_string(m.rows()) + " rows, manifest says " +
                                           std::to_string(rows));
  }
  return m;
}

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = n01(rng);
  return m;
}

}  // namespace

std::string_view anchor_source_name(AnchorSource s) {
  return s == AnchorSource::kText ? "text" : "image";
}

std::optional<AnchorSource> parse_anchor_source(std::string_view name) {
  if (name == "text") return AnchorSource::kText;
  if (name == "image") return AnchorSource::kImage;
  return std::nullopt;
}

std::vector<std::string> Manifest::non_anchor_languages() const {
  std::vector<std::string> out;
  for (const auto& l : languages) {
    if (l != anchor_language) out.push_back(l);
  }
  return out;
}

const std::vector<std::uint32_t>& Manifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) fail(ErrorCode::kBadConfig, "manifest has no split '" + name + "'");
  return it->second;
}

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["format"] = kManifestFormat;
  j["version"] = kManifestVersion;
  j["num_rows"] = m.num_rows;
  j["languages"] = m.languages;
  j["anchor_language"] = m.anchor_language;
  j["anchor_source"] = anchor_source_name(m.anchor_source);
  j["image_file"] = m.image_file;
  json files = json::object();
  for (const auto& [lang, f] : m.files) {
    json entry = json::object();
    entry["student_base"] = f.student_base;
    if (!f.teacher_text.empty()) entry["teacher_text"] = f.teacher_text;
    files[lang] = entry;
  }
  j["files"] = files;
  j["splits"] = m.splits;
  json vqa = json::object();
  for (const auto& [split, items] : m.vqa) {
    json arr = json::array();
    for (const auto& item : items) {
      arr.push_back({{"image", item.image}, {"candidates", item.candidates}, {"gold", item.gold}});
    }
    vqa[split] = arr;
  }
  j["vqa"] = vqa;
  return j.dump(1) + "\n";
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  detail::write_file(path, manifest_to_json(m));
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadConfig, "manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kManifestFormat) {
    fail(ErrorCode::kBadConfig, path.string() + " is not a kdalign manifest");
  }
  if (get_field<int>(j, "version") != kManifestVersion) {
    fail(ErrorCode::kBadConfig, "unsupported manifest version");
  }
  Manifest m;
  m.root = path.parent_path();
  m.num_rows = get_field<std::size_t>(j, "num_rows");
  m.languages = get_field<std::vector<std::string>>(j, "languages");
  m.anchor_language = get_field<std::string>(j, "anchor_language");
  const auto source = parse_anchor_source(get_field<std::string>(j, "anchor_source"));
  if (!source) fail(ErrorCode::kBadConfig, "anchor_source must be 'text' or 'image'");
  m.anchor_source = *source;
  m.image_file = get_field<std::string>(j, "image_file");
  const json files = get_field<json>(j, "files");
  for (const auto& [lang, entry] : files.items()) {
    LanguageFiles f;
    f.student_base = get_field<std::string>(entry, "student_base");
    if (entry.contains("teacher_text")) f.teacher_text = get_field<std::string>(entry, "teacher_text");
    m.files[lang] = f;
  }
  m.splits = get_field<std::map<std::string, std::vector<std::uint32_t>>>(j, "splits");
  if (j.contains("vqa")) {
    for (const auto& [split, items] : j.at("vqa").items()) {
      auto& out = m.vqa[split];
      for (const auto& item : items) {
        VqaItem v;
        v.image = get_field<std::uint32_t>(item, "image");
        v.candidates = get_field<std::vector<std::uint32_t>>(item, "candidates");
        v.gold = get_field<std::uint32_t>(item, "gold");
        out.push_back(std::move(v));
      }
    }
  }
  return m;
}

std::size_t Dataset::base_dim() const { return student_base.begin()->second.cols(); }
std::size_t Dataset::teacher_dim() const { return image.cols(); }

const Matrix& Dataset::teacher_anchor() const {
  if (manifest.anchor_source == AnchorSource::kImage) return image;
  return teacher_text.at(manifest.anchor_language);
}

Dataset load_dataset(const Manifest& m) {
  if (m.languages.empty()) fail(ErrorCode::kBadConfig, "manifest lists no languages");
  if (std::ranges::find(m.languages, m.anchor_language) == m.languages.end()) {
    fail(ErrorCode::kBadConfig, "anchor_language '" + m.anchor_language + "' is not in languages");
  }
  for (const auto& [name, ids] : m.splits) {
    for (std::uint32_t id : ids) {
      if (id >= m.num_rows) fail(ErrorCode::kBadConfig, "split '" + name + "' references id " +
                                                            std::to_string(id) + " >= num_rows");
    }
  }
  for (const auto& [name, items] : m.vqa) {
    for (const auto& item : items) {
      if (item.candidates.size() < 2 || item.gold >= item.candidates.size() ||
          item.image >= m.num_rows ||
          std::ranges::any_of(item.candidates, [&](std::uint32_t c) { return c >= m.num_rows; })) {
        fail(ErrorCode::kBadConfig, "malformed VQA item in split '" + name + "'");
      }
    }
  }

  Dataset d;
  d.manifest = m;
  d.image = load_checked(m.root / m.image_file, m.num_rows, "image embeddings");
  for (const auto& lang : m.languages) {
    auto it = m.files.find(lang);
    if (it == m.files.end()) fail(ErrorCode::kBadConfig, "no files listed for language '" + lang + "'");
    Matrix base = load_checked(m.root / it->second.student_base, m.num_rows, lang + " student_base");
    if (!d.student_base.empty() && base.cols() != d.base_dim()) {
      fail(ErrorCode::kDimMismatch, lang + " student_base width differs from other languages");
    }
    d.student_base.emplace(lang, std::move(base));
    if (!it->second.teacher_text.empty()) {
      Matrix t = load_checked(m.root / it->second.teacher_text, m.num_rows, lang + " teacher_text");
      if (t.cols() != d.image.cols()) {
        fail(ErrorCode::kDimMismatch, lang + " teacher_text width differs from image embeddings");
      }
      d.teacher_text.emplace(lang, std::move(t));
    }
  }
  if (m.anchor_source == AnchorSource::kText && !d.teacher_text.contains(m.anchor_language)) {
    fail(ErrorCode::kBadConfig, "anchor language has no teacher_text file");
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  return load_dataset(read_manifest(manifest_path));
}

void SyntheticSpec::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) fail(ErrorCode::kBadConfig, std::string("synthetic spec field '") + field + "' is invalid");
  };
  require(n_concepts > 0, "n_concepts");
  require(n_languages > 0, "n_languages");
  require(teacher_dim > 0, "teacher_dim");
  require(base_dim > 0, "base_dim");
  require(std::isfinite(sigma_lang) && sigma_lang >= 0.0, "sigma_lang");
  require(std::isfinite(sigma_sample) && sigma_sample >= 0.0, "sigma_sample");
  require(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction");
  require(test_fraction >= 0.0 && test_fraction < 1.0, "test_fraction");
  require(val_fraction + test_fraction < 1.0, "test_fraction");
  require(vqa_choices >= 2, "vqa_choices");
}

std::string default_language_tag(std::size_t index) {
  static constexpr std::string_view kTags[] = {"en", "de", "fr", "es", "ja", "zh", "ru", "ar",
                                               "hi", "sw", "tr", "vi", "id", "ko", "pt", "it"};
  if (index < std::size(kTags)) return std::string(kTags[index]);
  return "l" + std::to_string(index);
}

Manifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t n = spec.n_concepts;
  const std::size_t td = spec.teacher_dim;
  const std::size_t bd = spec.base_dim;
  std::mt19937_64 rng(spec.seed);

  const Matrix concepts = normalize_rows(gaussian(n, td, rng));

  Matrix image = gaussian(n, td, rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < td; ++c) {
      image(i, c) = concepts(i, c) + spec.sigma_sample * image(i, c);
    }
  }
  image = normalize_rows(image);

  Manifest m;
  m.root = out_dir;
  m.num_rows = n;
  m.anchor_language = default_language_tag(0);
  m.anchor_source = AnchorSource::kText;
  m.image_file = "image.mkde";
  write_embeddings(out_dir / m.image_file, image, spec.dtype);

  // Distortion rows: the coordinates outside the embedded concept block.
  const std::size_t shared = std::min(td, bd);
  const std::size_t distort_begin = bd > td ? td : 0;
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(td));

  for (std::size_t l = 0; l < spec.n_languages; ++l) {
    const std::string lang = default_language_tag(l);
    m.languages.push_back(lang);
    const Matrix mixing = gaussian(bd, td, rng);
    const Matrix offset = gaussian(1, bd, rng);
    const Matrix noise = gaussian(n, bd, rng);

    Matrix base(n, bd);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = concepts.row(i);
      auto x = base.row(i);
      for (std::size_t r = 0; r < shared; ++r) x[r] = c[r];
      for (std::size_t r = distort_begin; r < bd; ++r) {
        double v = offset(0, r);
        for (std::size_t k = 0; k < td; ++k) v += mix_scale * mixing(r, k) * c[k];
        x[r] += spec.sigma_lang * v;
      }
      for (std::size_t r = 0; r < bd; ++r) x[r] += spec.sigma_sample * noise(i, r);
    }
    LanguageFiles f{lang + ".base.mkde", lang + ".teacher.mkde"};
    write_embeddings(out_dir / f.student_base, base, spec.dtype);
    write_embeddings(out_dir / f.teacher_text, concepts, spec.dtype);
    m.files[lang] = f;
  }

  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(n)));
  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::uint32_t> ids(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                   order.begin() + static_cast<std::ptrdiff_t>(begin + count));
    std::ranges::sort(ids);
    return ids;
  };
  m.splits["test"] = take(0, n_test);
  m.splits["val"] = take(n_test, n_val);
  m.splits["train"] = take(n_test + n_val, n - n_test - n_val);

  for (const char* split : {"val", "test"}) {
    const auto& ids = m.splits[split];
    auto& items = m.vqa[split];
    if (ids.size() < spec.vqa_choices) continue;
    for (std::uint32_t id : ids) {
      std::vector<std::uint32_t> pool;
      for (std::uint32_t other : ids) {
        if (other != id) pool.push_back(other);
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      VqaItem item;
      item.image = id;
      item.candidates.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.vqa_choices - 1));
      item.gold = static_cast<std::uint32_t>(
          std::uniform_int_distribution<std::size_t>(0, spec.vqa_choices - 1)(rng));
      item.candidates.insert(item.candidates.begin() + item.gold, id);
      items.push_back(std::move(item));
    }
  }

  write_manifest(out_dir / "manifest.json", m);
  return m;
}

BatchSampler::BatchSampler(const Dataset& data, std::string split, std::size_t batch_size,
                           std::uint64_t seed)
    : data_(&data), ids_(data.manifest.split(split)), batch_size_(batch_size), engine_(seed) {
  if (batch_size == 0) fail(ErrorCode::kBadConfig, "batch_size must be >= 1");
  if (ids_.size() < batch_size) {
    fail(ErrorCode::kBadConfig, "split '" + split + "' has " + std::to_string(ids_.size()) +
                                    " samples, fewer than batch_size " + std::to_string(batch_size));
  }
  batches_per_epoch_ = ids_.size() / batch_size;
  const auto& langs = data.manifest.languages;
  for (std::size_t i = 0; i < langs.size(); ++i) {
    if (langs[i] == data.manifest.anchor_language) {
      anchor_index_ = i;
    } else {
      multi_languages_.push_back(i);
    }
  }
  // A single-language dataset pairs the anchor language with itself.
  if (multi_languages_.empty()) multi_languages_.push_back(anchor_index_);
  start_epoch();
}

void BatchSampler::start_epoch() {
  std::ostringstream os;
  os << engine_;
  state_.epoch_engine = os.str();
  state_.position = 0;
  order_ = ids_;
  std::shuffle(order_.begin(), order_.end(), engine_);
  std::uniform_int_distribution<std::size_t> pick(0, multi_languages_.size() - 1);
  language_plan_.resize(order_.size());
  for (auto& l : language_plan_) l = multi_languages_[pick(engine_)];
}

void BatchSampler::restore(const SamplerState& state) {
  std::istringstream is(state.epoch_engine);
  is >> engine_;
  if (!is) fail(ErrorCode::kBadCheckpoint, "corrupt sampler engine state");
  start_epoch();
  state_.epoch = state.epoch;
  if (state.position > batches_per_epoch_) fail(ErrorCode::kBadCheckpoint, "sampler position out of range");
  state_.position = state.position;
}

Batch BatchSampler::next() {
  if (state_.position == batches_per_epoch_) {
    ++state_.epoch;
    start_epoch();
  }
  const std::size_t begin = static_cast<std::size_t>(state_.position) * batch_size_;
  ++state_.position;

  const auto& langs = data_->manifest.languages;
  Batch b;
  std::vector<std::size_t> rows(batch_size_);
  b.ids.resize(batch_size_);
  b.languages.resize(batch_size_);
  for (std::size_t i = 0; i < batch_size_; ++i) {
    b.ids[i] = order_[begin + i];
    b.languages[i] = language_plan_[begin + i];
    rows[i] = b.ids[i];
  }
  const Matrix& anchor_base = data_->student_base.at(langs[anchor_index_]);
  b.base_anchor = Matrix::gather_rows(anchor_base, rows);
  b.teacher_anchor = Matrix::gather_rows(data_->teacher_anchor(), rows);
  b.base_multi = Matrix(batch_size_, anchor_base.cols());
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const auto src = data_->student_base.at(langs[b.languages[i]]).row(rows[i]);
    std::ranges::copy(src, b.base_multi.row(i).begin());
  }
  return b;
}

}  // namespace kdalign
