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

#include "ppaudio/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "ppaudio/error.hpp"

namespace ppaudio::eval {
namespace {

std::vector<int> predict_rows(const forest::RandomForestModel& model, const dataset::FeatureTable& table) {
  if (table.empty()) fail(ErrorCode::EmptyTable, "cannot evaluate an empty table");
  if (!model.schema_id.empty() && table.schema_id() != model.schema_id)
    fail(ErrorCode::SchemaMismatch, "table schema " + table.schema_id() + " does not match model schema " +
                                        model.schema_id);
  std::vector<int> out;
  out.reserve(table.size());
  for (const auto& row : table.rows) out.push_back(forest::predict(model, row.values).label);
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<Importance> sorted_desc(std::vector<Importance> v) {
  std::stable_sort(v.begin(), v.end(), [](const Importance& a, const Importance& b) {
    return a.importance > b.importance;
  });
  return v;
}

}  // namespace

EvalReport report_from_labels(const std::vector<int>& truth, const std::vector<int>& predicted,
                              const std::vector<std::string>& class_names) {
  if (truth.size() != predicted.size()) fail(ErrorCode::Internal, "label lists differ in length");
  if (truth.empty()) fail(ErrorCode::EmptyTable, "cannot evaluate an empty table");
  const std::size_t k = class_names.size();
  EvalReport r;
  r.n_rows = truth.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k)
      fail(ErrorCode::SchemaMismatch, "label outside the model's class table");
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += r.confusion[c][c];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_rows);

  // Macro averages run over classes present in the truth or the predictions.
  std::size_t active = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t support = 0;
    std::size_t predicted_c = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += r.confusion[c][j];
      predicted_c += r.confusion[j][c];
    }
    ClassMetrics m;
    m.label = static_cast<int>(c);
    m.name = class_names[c];
    m.support = support;
    const double tp = static_cast<double>(r.confusion[c][c]);
    if (predicted_c > 0) m.precision = tp / static_cast<double>(predicted_c);
    if (support > 0) m.recall = tp / static_cast<double>(support);
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    if (support > 0 || predicted_c > 0) {
      if (predicted_c == 0 || support == 0) r.zero_division = true;
      ++active;
      r.macro_precision += m.precision;
      r.macro_recall += m.recall;
      r.macro_f1 += m.f1;
    }
    r.per_class.push_back(std::move(m));
  }
  if (active > 0) {
    r.macro_precision /= static_cast<double>(active);
    r.macro_recall /= static_cast<double>(active);
    r.macro_f1 /= static_cast<double>(active);
  }
  return r;
}

EvalReport evaluate(const forest::RandomForestModel& model, const dataset::FeatureTable& table) {
  const std::vector<int> predicted = predict_rows(model, table);
  std::vector<int> truth;
  truth.reserve(table.size());
  for (const auto& row : table.rows) truth.push_back(row.label);
  EvalReport r = report_from_labels(truth, predicted, model.class_names);
  r.level = "window";
  return r;
}

int majority_vote(const std::vector<int>& labels, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (int l : labels) ++counts.at(static_cast<std::size_t>(l));
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

EvalReport clip_level_evaluate(const forest::RandomForestModel& model, const dataset::FeatureTable& table) {
  const std::vector<int> predicted = predict_rows(model, table);
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<int>> votes;
  std::vector<int> truth;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table.rows[i];
    auto [it, inserted] = slot.emplace(row.clip_id, votes.size());
    if (inserted) {
      votes.emplace_back();
      truth.push_back(row.label);
    }
    votes[it->second].push_back(predicted[i]);
  }
  std::vector<int> clip_pred;
  clip_pred.reserve(votes.size());
  for (const auto& v : votes) clip_pred.push_back(majority_vote(v, model.n_classes));
  EvalReport r = report_from_labels(truth, clip_pred, model.class_names);
  r.level = "clip";
  return r;
}

ImportanceReport importance_report(const std::vector<double>& per_dimension, const features::FeatureSchema& schema) {
  const auto names = schema.dimension_names();
  const auto families = schema.dimension_families();
  if (per_dimension.size() != names.size())
    fail(ErrorCode::SchemaMismatch, "importance vector has " + std::to_string(per_dimension.size()) +
                                        " entries, schema " + schema.id() + " has " + std::to_string(names.size()));
  ImportanceReport r;
  std::vector<Importance> fam;
  for (const auto& e : schema.entries()) fam.push_back({e.name, 0.0});
  for (std::size_t i = 0; i < names.size(); ++i) {
    r.per_dimension.push_back({names[i], per_dimension[i]});
    for (auto& f : fam)
      if (f.name == families[i]) f.importance += per_dimension[i];
  }
  r.per_dimension = sorted_desc(std::move(r.per_dimension));
  r.per_family = sorted_desc(std::move(fam));
  return r;
}

ImportanceReport importance_report(const forest::RandomForestModel& model, const features::FeatureSchema& schema) {
  if (!model.schema_id.empty() && model.schema_id != schema.id())
    fail(ErrorCode::SchemaMismatch, "model schema " + model.schema_id + " does not match " + schema.id());
  return importance_report(forest::gini_importance(model), schema);
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : r.per_class)
    per_class.push_back({{"label", m.label},
                         {"name", m.name},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  return {{"level", r.level},
          {"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"averaging", "macro over classes present in truth or predictions"},
          {"zero_division", r.zero_division},
          {"n_rows", r.n_rows},
          {"split_unit", r.split_unit},
          {"seed", r.seed},
          {"per_class", per_class},
          {"confusion", r.confusion}};
}

nlohmann::json to_json(const ImportanceReport& r) {
  auto list = [](const std::vector<Importance>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& i : v) a.push_back({{"name", i.name}, {"importance", i.importance}});
    return a;
  };
  return {{"per_dimension", list(r.per_dimension)}, {"per_family", list(r.per_family)}};
}

std::string to_text(const EvalReport& r) {
  std::size_t width = 5;
  for (const auto& m : r.per_class) width = std::max(width, m.name.size());
  std::ostringstream out;
  out << r.level << "-level accuracy " << fixed(r.accuracy) << " over " << r.n_rows << " "
      << (r.level == "clip" ? "clips" : "rows") << ", macro F1 " << fixed(r.macro_f1) << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%5s  %-*s  %9s  %9s  %9s  %7s\n", "label", static_cast<int>(width), "class",
                "precision", "recall", "f1", "support");
  out << line;
  for (const auto& m : r.per_class) {
    if (m.support == 0 && m.precision == 0.0) continue;
    std::snprintf(line, sizeof line, "%5d  %-*s  %9.4f  %9.4f  %9.4f  %7zu\n", m.label, static_cast<int>(width),
                  m.name.c_str(), m.precision, m.recall, m.f1, m.support);
    out << line;
  }
  return out.str();
}

std::string to_text(const ImportanceReport& r) {
  std::ostringstream out;
  char line[256];
  out << "feature family importance\n";
  for (const auto& f : r.per_family) {
    std::snprintf(line, sizeof line, "  %-20s %.4f\n", f.name.c_str(), f.importance);
    out << line;
  }
  out << "per-dimension importance\n";
  for (const auto& f : r.per_dimension) {
    std::snprintf(line, sizeof line, "  %-32s %.4f\n", f.name.c_str(), f.importance);
    out << line;
  }
  return out.str();
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "truth\\predicted";
  for (const auto& m : r.per_class) out << ',' << dataset::csv_escape(m.name);
  out << '\n';
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    out << dataset::csv_escape(r.per_class[i].name);
    for (std::size_t v : r.confusion[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace ppaudio::eval
