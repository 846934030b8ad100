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

#include "ppaudio/config.hpp"
#include "ppaudio/dataset.hpp"
#include "ppaudio/eval.hpp"
#include "ppaudio/forest.hpp"

namespace ppaudio::pipeline {

inline constexpr const char* kStageOrder = "decode>trim_silence>segment>extract";

struct ExtractResult {
  dataset::FeatureTable table;
  dataset::BuildStats stats;
};

/// Reads cfg.manifest_path and the WAVs under cfg.audio_dir.
ExtractResult extract_dataset(const RunConfig& cfg);

nlohmann::json stats_json(const dataset::BuildStats& stats);

/// Stores the extraction settings in the model so single files can be
/// classified with exactly the features it was trained on.
void attach_extraction(forest::RandomForestModel& model, const RunConfig& cfg);
/// Trim/window/spectral/features from the model; defaults if absent.
RunConfig extraction_from_model(const forest::RandomForestModel& model);

struct ClipClassification {
  int label = 0;
  std::string category;
  std::vector<int> window_labels;
  std::vector<std::size_t> histogram;  // window predictions per class
};

/// trim -> segment -> extract -> predict per window, then majority vote.
/// Throws EmptyAfterTrim for a clip with no signal.
ClipClassification classify_clip(const forest::RandomForestModel& model, const audio::AudioClip& clip);

nlohmann::json to_json(const ClipClassification& c);

nlohmann::json split_json(const dataset::SplitIndices& split, const dataset::SplitSpec& spec, std::size_t rows);
dataset::SplitIndices split_from_json(const nlohmann::json& doc, std::size_t rows);

}  // namespace ppaudio::pipeline
