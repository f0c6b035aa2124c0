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

// JSON configuration files for the synthetic generator and the trainer.
// Every file is merged onto a complete default document: unknown keys and
// values of the wrong type are rejected with BadConfig.

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "kdalign/dataset.hpp"
#include "kdalign/trainer.hpp"

namespace kdalign {

nlohmann::json default_train_config_json();
nlohmann::json default_synthetic_spec_json();

// Recursively copies `overlay` onto `base`. Every key must already exist in
// `base` with a compatible type (an integer may stand in for a real).
void merge_config(nlohmann::json& base, const nlohmann::json& overlay,
                  const std::string& prefix = "");

// "a.b.c=value" with the value parsed according to the default's type.
void apply_override(nlohmann::json& cfg, std::string_view assignment);

nlohmann::json load_config_file(const std::filesystem::path& path);

// Learning rate, epochs and weights for the named method preset: FD, ED, SD,
// MCL, DR or DR+FD. BadConfig for any other name.
void apply_method_preset(nlohmann::json& cfg, std::string_view method);

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

}  // namespace kdalign
