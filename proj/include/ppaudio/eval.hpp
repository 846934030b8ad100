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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppaudio/dataset.hpp"
#include "ppaudio/forest.hpp"

namespace ppaudio::eval {

struct ClassMetrics {
  int label = 0;
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::string level;  // "window" or "clip"
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  bool zero_division = false;  // some precision/recall had a zero denominator
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::size_t n_rows = 0;
  std::string split_unit;
  std::uint64_t seed = 0;
};

/// Metrics from paired label lists; labels must lie in [0, n_classes).
EvalReport report_from_labels(const std::vector<int>& truth, const std::vector<int>& predicted,
                              const std::vector<std::string>& class_names);

/// One prediction per row. Throws SchemaMismatch or EmptyTable.
EvalReport evaluate(const forest::RandomForestModel& model, const dataset::FeatureTable& table);

/// Majority vote of window predictions per clip_id, ties to the lowest label.
EvalReport clip_level_evaluate(const forest::RandomForestModel& model, const dataset::FeatureTable& table);

int majority_vote(const std::vector<int>& labels, std::size_t n_classes);

struct Importance {
  std::string name;
  double importance = 0.0;
};

struct ImportanceReport {
  std::vector<Importance> per_dimension;  // descending
  std::vector<Importance> per_family;     // descending
};

ImportanceReport importance_report(const std::vector<double>& per_dimension,
                                   const features::FeatureSchema& schema);
ImportanceReport importance_report(const forest::RandomForestModel& model, const features::FeatureSchema& schema);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const ImportanceReport& report);
std::string to_text(const EvalReport& report);
std::string to_text(const ImportanceReport& report);
std::string confusion_csv(const EvalReport& report);

}  // namespace ppaudio::eval
