// Copyright 2026 The ppaudio Authors.
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

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppaudio/audio_io.hpp"
#include "ppaudio/dataset.hpp"
#include "ppaudio/features.hpp"
#include "ppaudio/forest.hpp"

namespace ppaudio {

/// Every tunable of a run in one place. Serialized into run manifests and
/// (extraction part only) into trained models.
struct RunConfig {
  std::filesystem::path audio_dir;
  std::filesystem::path manifest_path;
  std::filesystem::path output_dir;
  std::vector<std::string> features;  // family names in schema order
  audio::TrimConfig trim;
  audio::WindowConfig window;
  features::SpectralConfig spectral;
  dataset::SplitSpec split;
  forest::ForestParams forest;
  unsigned threads = 0;  // 0 = hardware concurrency; never affects outputs

  RunConfig();

  features::FeatureSchema schema() const;
  dataset::BuildOptions build_options() const;
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys and ill-typed values throw
/// InvalidConfig; forbidden feature names throw ForbiddenFeature.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);

/// The subset that determines feature extraction (features, trim, window, spectral).
nlohmann::json extraction_json(const RunConfig& cfg);

}  // namespace ppaudio
