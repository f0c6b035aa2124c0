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

#include "kdalign/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "binary_io.hpp"
#include "kdalign/checkpoint.hpp"
#include "kdalign/config.hpp"
#include "kdalign/dataset.hpp"
#include "kdalign/error.hpp"
#include "kdalign/evaluate.hpp"
#include "kdalign/trainer.hpp"

namespace kdalign {
namespace {

void setup_logging(int verbosity, bool quiet) {
  auto logger = spdlog::get("kdalign");
  if (!logger) logger = spdlog::stderr_logger_mt("kdalign");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::info;
  if (quiet) level = spdlog::level::warn;
  if (verbosity >= 1) level = spdlog::level::debug;
  if (verbosity >= 2) level = spdlog::level::trace;
  spdlog::set_level(level);
}

nlohmann::json build_config(nlohmann::json base, const std::string& config_path,
                            const std::vector<std::string>& overrides) {
  if (!config_path.empty()) merge_config(base, load_config_file(config_path));
  for (const auto& o : overrides) apply_override(base, o);
  return base;
}

int gen_data(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& out) {
  const SyntheticSpec spec =
      synthetic_spec_from_json(build_config(default_synthetic_spec_json(), config_path, overrides));
  const Manifest m = generate_synthetic(spec, out);
  const Dataset data = load_dataset(m);
  spdlog::info("wrote {} concepts x {} languages to {} (teacher dim {}, base dim {})", m.num_rows,
               m.languages.size(), out, data.teacher_dim(), data.base_dim());
  for (const auto& [name, ids] : m.splits) spdlog::info("  split {}: {} samples", name, ids.size());
  if (!m.split("test").empty()) {
    spdlog::info("teacher self-retrieval I2T R@1 on test: {:.4f}",
                 multilingual_i2t_recall(data, nullptr, "test"));
  }
  return 0;
}

int train_cmd(const std::string& config_path, const std::string& method,
              const std::vector<std::string>& overrides, const std::string& manifest_path,
              const std::string& out, const std::string& resume_path) {
  if (!resume_path.empty()) {
    Checkpoint ckpt = read_checkpoint(resume_path);
    nlohmann::json cfg_json;
    try {
      cfg_json = nlohmann::json::parse(ckpt.config_json);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kBadCheckpoint, std::string("embedded config unreadable: ") + e.what());
    }
    cfg_json = build_config(cfg_json, config_path, overrides);
    const TrainConfig cfg = train_config_from_json(cfg_json);
    ckpt.config_json = train_config_to_json(cfg).dump();
    const Dataset data = load_dataset(apply_anchor_overrides(read_manifest(manifest_path), cfg));
    Trainer trainer = Trainer::from_checkpoint(ckpt, data);
    spdlog::info("resuming from {} at step {}", resume_path, trainer.steps_done());
    run_training(trainer, out);
    return 0;
  }

  nlohmann::json base = default_train_config_json();
  if (!method.empty()) apply_method_preset(base, method);
  const TrainConfig cfg = train_config_from_json(build_config(base, config_path, overrides));
  const Dataset data = load_dataset(apply_anchor_overrides(read_manifest(manifest_path), cfg));
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out + ": " + ec.message());
  detail::write_file(std::filesystem::path(out) / "config.json", train_config_to_json(cfg).dump(2) + "\n");
  train(cfg, data, out);
  return 0;
}

int eval_cmd(const std::string& checkpoint_path, bool teacher, const std::string& manifest_path,
             const std::string& split, const std::string& out, std::string name, std::uint64_t seed) {
  if (teacher == !checkpoint_path.empty()) {
    fail(ErrorCode::kBadConfig, "pass exactly one of --checkpoint or --teacher-as-student");
  }
  Manifest manifest = read_manifest(manifest_path);
  std::optional<Checkpoint> ckpt;
  if (!teacher) {
    ckpt = read_checkpoint(checkpoint_path);
    try {
      const TrainConfig cfg = train_config_from_json(nlohmann::json::parse(ckpt->config_json));
      manifest = apply_anchor_overrides(std::move(manifest), cfg);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kBadCheckpoint, std::string("embedded config unreadable: ") + e.what());
    }
  }
  const Dataset data = load_dataset(manifest);
  EvalOptions options;
  options.seed = seed;
  EvalReport report = evaluate(data, ckpt ? &ckpt->params : nullptr, split, options);
  if (name.empty()) {
    name = teacher ? "teacher" : std::filesystem::path(checkpoint_path).parent_path().filename().string();
    if (name.empty()) name = "student";
  }
  report.name = name;
  write_report_files(report, out);
  spdlog::info("{} on {}: En I2T R@1 {:.4f}, purity {:.4f}", name, split, report.en.i2t[0], report.purity);
  if (report.mul) spdlog::info("  Mul I2T R@1 {:.4f}, T2I R@1 {:.4f}", report.mul->i2t[0], report.mul->t2i[0]);
  return 0;
}

int report_cmd(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<EvalReport> reports;
  for (const auto& p : paths) reports.push_back(read_report(p));
  const ComparisonTable table = compare_reports(reports);
  std::cout << table.to_text();
  if (!out.empty()) detail::write_file(out, table.to_csv());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Multilingual vision-language embedding distillation"};
  app.require_subcommand(1);
  int verbosity = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbosity, "More logging (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::string config_path, out, manifest_path, method, resume_path, checkpoint_path, split = "test", name;
  std::vector<std::string> overrides, report_paths;
  bool teacher = false;
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic multilingual dataset");
  gen->add_option("-c,--config", config_path, "Synthetic spec (JSON)");
  gen->add_option("-O,--override", overrides, "key=value override (repeatable)");
  gen->add_option("-o,--out", out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Distil a student head against the teacher");
  tr->add_option("-c,--config", config_path, "Training config (JSON)");
  tr->add_option("--method", method, "Preset: FD, ED, SD, MCL, DR or DR+FD");
  tr->add_option("-O,--override", overrides, "key=value override (repeatable)");
  tr->add_option("-m,--manifest", manifest_path, "Dataset manifest")->required();
  tr->add_option("-o,--out", out, "Run directory")->required();
  tr->add_option("--resume", resume_path, "Continue from a checkpoint");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint (or the teacher)");
  ev->add_option("--checkpoint", checkpoint_path, "KDCK checkpoint");
  ev->add_flag("--teacher-as-student", teacher, "Score the teacher's own text embeddings");
  ev->add_option("-m,--manifest", manifest_path, "Dataset manifest")->required();
  ev->add_option("--split", split, "Split to evaluate")->capture_default_str();
  ev->add_option("-o,--out", out, "Report directory")->required();
  ev->add_option("--name", name, "Method name recorded in the report");
  ev->add_option("--seed", seed, "Seed for the purity clustering")->capture_default_str();

  auto* rep = app.add_subcommand("report", "Compare evaluation reports");
  rep->add_option("reports", report_paths, "report.json files")->required()->expected(1, -1);
  rep->add_option("-o,--out", out, "Also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  setup_logging(verbosity, quiet);

  try {
    if (*gen) return gen_data(config_path, overrides, out);
    if (*tr) return train_cmd(config_path, method, overrides, manifest_path, out, resume_path);
    if (*ev) return eval_cmd(checkpoint_path, teacher, manifest_path, split, out, name, seed);
    if (*rep) return report_cmd(report_paths, out);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace kdalign
