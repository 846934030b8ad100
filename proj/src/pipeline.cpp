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

#include "ppaudio/pipeline.hpp"

#include <set>

#include "ppaudio/error.hpp"

namespace ppaudio::pipeline {

using nlohmann::json;

ExtractResult extract_dataset(const RunConfig& cfg) {
  cfg.validate();
  const dataset::Manifest manifest = dataset::read_manifest(cfg.manifest_path);
  ExtractResult out;
  out.table = dataset::build_feature_table(manifest, cfg.audio_dir, cfg.build_options(), &out.stats);
  return out;
}

json stats_json(const dataset::BuildStats& s) {
  return {{"clips", s.clips},
          {"clips_used", s.clips_used},
          {"clips_skipped", s.clips_skipped},
          {"skipped_files", s.skipped_files},
          {"rows", s.rows},
          {"sample_rate", s.sample_rate},
          {"stage_order", kStageOrder}};
}

void attach_extraction(forest::RandomForestModel& model, const RunConfig& cfg) {
  model.metadata["extraction"] = extraction_json(cfg);
  model.metadata["stage_order"] = kStageOrder;
}

RunConfig extraction_from_model(const forest::RandomForestModel& model) {
  if (!model.metadata.contains("extraction")) return RunConfig{};
  try {
    return config_from_json(model.metadata.at("extraction"));
  } catch (const Error& e) {
    fail(ErrorCode::CorruptModel, std::string("model extraction settings: ") + e.what());
  }
}

ClipClassification classify_clip(const forest::RandomForestModel& model, const audio::AudioClip& clip) {
  const RunConfig cfg = extraction_from_model(model);
  const auto options = cfg.build_options();
  if (options.schema.id() != model.schema_id)
    fail(ErrorCode::SchemaMismatch, "model schema " + model.schema_id + " does not match its extraction settings");
  const auto vectors = dataset::clip_feature_vectors(clip, options);
  ClipClassification out;
  out.histogram.assign(model.n_classes, 0);
  for (const auto& v : vectors) {
    const int label = forest::predict(model, v.values).label;
    out.window_labels.push_back(label);
    ++out.histogram[static_cast<std::size_t>(label)];
  }
  out.label = eval::majority_vote(out.window_labels, model.n_classes);
  out.category = model.class_names.at(static_cast<std::size_t>(out.label));
  return out;
}

json to_json(const ClipClassification& c) {
  json hist = json::object();
  for (std::size_t i = 0; i < c.histogram.size(); ++i)
    if (c.histogram[i] > 0) hist[std::to_string(i)] = c.histogram[i];
  return {{"label", c.label},
          {"category", c.category},
          {"windows", c.window_labels.size()},
          {"window_labels", c.window_labels},
          {"votes", hist}};
}

json split_json(const dataset::SplitIndices& split, const dataset::SplitSpec& spec, std::size_t rows) {
  return {{"unit", dataset::to_string(spec.unit)},
          {"seed", spec.seed},
          {"fractions", {spec.train_frac, spec.val_frac, spec.test_frac}},
          {"rows", rows},
          {"train", split.train},
          {"validation", split.validation},
          {"test", split.test}};
}

dataset::SplitIndices split_from_json(const json& doc, std::size_t rows) {
  dataset::SplitIndices out;
  try {
    if (doc.at("rows").get<std::size_t>() != rows)
      fail(ErrorCode::SchemaMismatch, "split record was made for " + std::to_string(doc.at("rows").get<std::size_t>()) +
                                          " rows, feature table has " + std::to_string(rows));
    out.train = doc.at("train").get<std::vector<std::size_t>>();
    out.validation = doc.at("validation").get<std::vector<std::size_t>>();
    out.test = doc.at("test").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("split record: ") + e.what());
  }
  std::set<std::size_t> seen;
  for (const auto* part : {&out.train, &out.validation, &out.test})
    for (std::size_t i : *part)
      if (i >= rows || !seen.insert(i).second) fail(ErrorCode::ParseError, "split record indices overlap or exceed the table");
  return out;
}

}  // namespace ppaudio::pipeline
