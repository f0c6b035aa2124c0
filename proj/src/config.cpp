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

#include "kdalign/config.hpp"

#include <charconv>
#include <string>

#include "binary_io.hpp"
#include "kdalign/error.hpp"

namespace kdalign {

using nlohmann::json;

json default_train_config_json() {
  return json::parse(R"({
    "loss": {
      "weights": {"FD": 0.0, "ED": 0.0, "SD": 0.0, "MCL": 0.0, "DR": 0.0},
      "tau_teacher": 0.05,
      "tau_student": 0.07,
      "tau_mcl": 0.07,
      "tau_sd": 1.0,
      "similarity": "cosine"
    },
    "queue": {"capacity": 4096, "min_fill": 0},
    "optim": {"lr": 1e-4, "warmup_steps": 1000, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "model": {"arch": "linear", "hidden_dim": 0, "init": "uniform"},
    "train": {
      "batch_size": 64, "epochs": 10, "steps": 0, "seed": 0,
      "eval_every": 0, "checkpoint_every": 0, "precision": "f64"
    },
    "data": {"anchor_language": "", "anchor_source": ""}
  })");
}

json default_synthetic_spec_json() {
  return json::parse(R"({
    "n_concepts": 512,
    "n_languages": 4,
    "teacher_dim": 16,
    "base_dim": 32,
    "sigma_lang": 0.5,
    "sigma_sample": 0.02,
    "seed": 0,
    "val_fraction": 0.125,
    "test_fraction": 0.25,
    "vqa_choices": 4,
    "dtype": "f64"
  })");
}

namespace {

bool compatible(const json& def, const json& v) {
  if (def.is_number_float()) return v.is_number();
  if (def.is_number_unsigned() || def.is_number_integer()) {
    return v.is_number_integer() || v.is_number_unsigned();
  }
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_object()) return v.is_object();
  return false;
}

const char* type_label(const json& def) {
  if (def.is_number_float()) return "a number";
  if (def.is_number()) return "an integer";
  if (def.is_boolean()) return "a boolean";
  if (def.is_string()) return "a string";
  return "an object";
}

template <typename T>
T read(const json& j, const char* section, const char* key) {
  const json& v = j.at(section).at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kBadConfig, std::string(section) + "." + key + " has the wrong type");
  }
}

}  // namespace

void merge_config(json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) fail(ErrorCode::kBadConfig, "config" + (prefix.empty() ? "" : " section " + prefix) + " must be an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) fail(ErrorCode::kBadConfig, "unknown config key '" + path + "'");
    json& target = base[key];
    if (!compatible(target, value)) {
      fail(ErrorCode::kBadConfig, "config key '" + path + "' must be " + type_label(target));
    }
    if (target.is_object()) {
      merge_config(target, value, path);
    } else if (target.is_number_float()) {
      target = value.get<double>();
    } else {
      target = value;
    }
  }
}

void apply_override(json& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(ErrorCode::kBadConfig, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      fail(ErrorCode::kBadConfig, "unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  auto bad = [&] {
    fail(ErrorCode::kBadConfig, "override " + key + "=" + value + ": value must be " + type_label(*node));
  };
  if (node->is_number_float()) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad();
    *node = v;
  } else if (node->is_number_unsigned() || node->is_number_integer()) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad();
    *node = v;
  } else if (node->is_boolean()) {
    if (value == "true") *node = true;
    else if (value == "false") *node = false;
    else bad();
  } else if (node->is_string()) {
    *node = value;
  } else {
    fail(ErrorCode::kBadConfig, "config key '" + key + "' is a section, not a value");
  }
}

json load_config_file(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadConfig, path.string() + " is not valid JSON: " + e.what());
  }
}

void apply_method_preset(json& cfg, std::string_view method) {
  struct Preset {
    std::string_view name;
    double lr;
    int epochs;
  };
  // Learning rate and epoch budget per method for the distillation runs.
  static constexpr Preset kPresets[] = {
      {"FD", 1e-5, 3}, {"ED", 1e-5, 3}, {"SD", 1e-5, 3},
      {"MCL", 1e-5, 2}, {"DR", 1e-4, 10}, {"DR+FD", 1e-4, 10},
  };
  for (const auto& p : kPresets) {
    if (p.name != method) continue;
    auto& w = cfg["loss"]["weights"];
    for (auto& [k, v] : w.items()) v = 0.0;
    std::string_view rest = method;
    while (!rest.empty()) {
      const auto plus = rest.find('+');
      w[std::string(rest.substr(0, plus))] = 1.0;
      rest = plus == std::string_view::npos ? std::string_view{} : rest.substr(plus + 1);
    }
    cfg["optim"]["lr"] = p.lr;
    cfg["optim"]["warmup_steps"] = 1000;
    cfg["train"]["batch_size"] = 64;
    cfg["train"]["epochs"] = p.epochs;
    return;
  }
  fail(ErrorCode::kBadConfig, "unknown method '" + std::string(method) + "' (FD, ED, SD, MCL, DR, DR+FD)");
}

TrainConfig train_config_from_json(const json& user) {
  json j = default_train_config_json();
  merge_config(j, user);

  TrainConfig c;
  for (Objective o : kAllObjectives) {
    c.weights[o] = j["loss"]["weights"][std::string(objective_name(o))].get<double>();
  }
  c.loss.tau_teacher = read<double>(j, "loss", "tau_teacher");
  c.loss.tau_student = read<double>(j, "loss", "tau_student");
  c.loss.tau_mcl = read<double>(j, "loss", "tau_mcl");
  c.loss.tau_sd = read<double>(j, "loss", "tau_sd");
  const auto sim = read<std::string>(j, "loss", "similarity");
  if (sim == "cosine") c.loss.similarity = Similarity::kCosine;
  else if (sim == "dot") c.loss.similarity = Similarity::kDot;
  else fail(ErrorCode::kBadConfig, "loss.similarity must be 'cosine' or 'dot'");

  auto count = [&](const char* section, const char* key) {
    const auto v = read<std::int64_t>(j, section, key);
    if (v < 0) fail(ErrorCode::kBadConfig, std::string(section) + "." + key + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  c.queue_capacity = count("queue", "capacity");
  c.dr_min_queue = count("queue", "min_fill");
  c.optim.base_lr = read<double>(j, "optim", "lr");
  c.optim.warmup_steps = count("optim", "warmup_steps");
  c.optim.beta1 = read<double>(j, "optim", "beta1");
  c.optim.beta2 = read<double>(j, "optim", "beta2");
  c.optim.eps = read<double>(j, "optim", "eps");

  const auto arch = parse_arch(read<std::string>(j, "model", "arch"));
  if (!arch) fail(ErrorCode::kBadConfig, "model.arch must be 'linear' or 'mlp2'");
  c.arch = *arch;
  c.hidden_dim = count("model", "hidden_dim");
  const auto init = read<std::string>(j, "model", "init");
  if (init == "uniform") c.init = StudentInit::kUniform;
  else if (init == "identity") c.init = StudentInit::kIdentity;
  else fail(ErrorCode::kBadConfig, "model.init must be 'uniform' or 'identity'");

  c.batch_size = count("train", "batch_size");
  c.epochs = count("train", "epochs");
  c.steps = count("train", "steps");
  c.seed = count("train", "seed");
  c.eval_every = count("train", "eval_every");
  c.checkpoint_every = count("train", "checkpoint_every");
  const auto precision = read<std::string>(j, "train", "precision");
  if (precision == "f64") c.precision = Precision::kF64;
  else if (precision == "f32") c.precision = Precision::kF32;
  else fail(ErrorCode::kBadConfig, "train.precision must be 'f64' or 'f32'");

  c.anchor_language = read<std::string>(j, "data", "anchor_language");
  const auto source = read<std::string>(j, "data", "anchor_source");
  if (!source.empty()) {
    c.anchor_source = parse_anchor_source(source);
    if (!c.anchor_source) fail(ErrorCode::kBadConfig, "data.anchor_source must be 'text' or 'image'");
  }
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  json j = default_train_config_json();
  for (Objective o : kAllObjectives) j["loss"]["weights"][std::string(objective_name(o))] = c.weights[o];
  j["loss"]["tau_teacher"] = c.loss.tau_teacher;
  j["loss"]["tau_student"] = c.loss.tau_student;
  j["loss"]["tau_mcl"] = c.loss.tau_mcl;
  j["loss"]["tau_sd"] = c.loss.tau_sd;
  j["loss"]["similarity"] = c.loss.similarity == Similarity::kCosine ? "cosine" : "dot";
  j["queue"]["capacity"] = c.queue_capacity;
  j["queue"]["min_fill"] = c.dr_min_queue;
  j["optim"]["lr"] = c.optim.base_lr;
  j["optim"]["warmup_steps"] = c.optim.warmup_steps;
  j["optim"]["beta1"] = c.optim.beta1;
  j["optim"]["beta2"] = c.optim.beta2;
  j["optim"]["eps"] = c.optim.eps;
  j["model"]["arch"] = arch_name(c.arch);
  j["model"]["hidden_dim"] = c.hidden_dim;
  j["model"]["init"] = c.init == StudentInit::kUniform ? "uniform" : "identity";
  j["train"]["batch_size"] = c.batch_size;
  j["train"]["epochs"] = c.epochs;
  j["train"]["steps"] = c.steps;
  j["train"]["seed"] = c.seed;
  j["train"]["eval_every"] = c.eval_every;
  j["train"]["checkpoint_every"] = c.checkpoint_every;
  j["train"]["precision"] = c.precision == Precision::kF64 ? "f64" : "f32";
  j["data"]["anchor_language"] = c.anchor_language;
  j["data"]["anchor_source"] = c.anchor_source ? std::string(anchor_source_name(*c.anchor_source)) : "";
  return j;
}

SyntheticSpec synthetic_spec_from_json(const json& user) {
  json j = default_synthetic_spec_json();
  merge_config(j, user);
  auto count = [&](const char* key) {
    const auto v = j.at(key).get<std::int64_t>();
    if (v < 0) fail(ErrorCode::kBadConfig, std::string("synthetic spec field '") + key + "' is invalid");
    return static_cast<std::size_t>(v);
  };
  SyntheticSpec s;
  s.n_concepts = count("n_concepts");
  s.n_languages = count("n_languages");
  s.teacher_dim = count("teacher_dim");
  s.base_dim = count("base_dim");
  s.sigma_lang = j.at("sigma_lang").get<double>();
  s.sigma_sample = j.at("sigma_sample").get<double>();
  s.seed = count("seed");
  s.val_fraction = j.at("val_fraction").get<double>();
  s.test_fraction = j.at("test_fraction").get<double>();
  s.vqa_choices = count("vqa_choices");
  const auto dtype = j.at("dtype").get<std::string>();
  if (dtype == "f64") s.dtype = Dtype::kF64;
  else if (dtype == "f32") s.dtype = Dtype::kF32;
  else fail(ErrorCode::kBadConfig, "synthetic spec field 'dtype' must be 'f32' or 'f64'");
  s.validate();
  return s;
}

}  // namespace kdalign
