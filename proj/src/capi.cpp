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

#include "ppaudio/ppaudio.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "ppaudio/config.hpp"
#include "ppaudio/dataset.hpp"
#include "ppaudio/error.hpp"
#include "ppaudio/eval.hpp"
#include "ppaudio/forest.hpp"
#include "ppaudio/pipeline.hpp"

struct ppa_config {
  ppaudio::RunConfig cfg;
};

struct ppa_table {
  ppaudio::dataset::FeatureTable table;
};

struct ppa_split {
  ppaudio::dataset::SplitIndices indices;
  ppaudio::dataset::SplitSpec spec;
  std::size_t rows = 0;
};

struct ppa_model {
  ppaudio::forest::RandomForestModel model;
};

namespace {

using ppaudio::ErrorCode;
using nlohmann::json;

thread_local std::string g_last_error;

ppa_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::TooShort: return PPA_ERR_INVALID_CONFIG;
    case ErrorCode::LengthMismatch: return PPA_ERR_INVALID_ARGUMENT;
    case ErrorCode::ForbiddenFeature: return PPA_ERR_FORBIDDEN_FEATURE;
    case ErrorCode::UnknownFeature: return PPA_ERR_UNKNOWN_FEATURE;
    case ErrorCode::DegenerateSplit: return PPA_ERR_DEGENERATE_SPLIT;
    case ErrorCode::MalformedHeader:
    case ErrorCode::UnsupportedEncoding:
    case ErrorCode::EmptyAudio:
    case ErrorCode::NonFiniteSample:
    case ErrorCode::DecodeError: return PPA_ERR_DECODE;
    case ErrorCode::EmptyAfterTrim: return PPA_ERR_EMPTY_AFTER_TRIM;
    case ErrorCode::MissingColumn:
    case ErrorCode::BadLabel:
    case ErrorCode::DuplicateFilename: return PPA_ERR_MANIFEST;
    case ErrorCode::MissingFile: return PPA_ERR_MISSING_FILE;
    case ErrorCode::SampleRateMismatch: return PPA_ERR_SAMPLE_RATE_MISMATCH;
    case ErrorCode::SchemaMismatch: return PPA_ERR_SCHEMA_MISMATCH;
    case ErrorCode::ParseError: return PPA_ERR_PARSE;
    case ErrorCode::EmptyTrainingSet:
    case ErrorCode::EmptyTable: return PPA_ERR_EMPTY_TABLE;
    case ErrorCode::VersionMismatch: return PPA_ERR_VERSION_MISMATCH;
    case ErrorCode::CorruptModel: return PPA_ERR_CORRUPT_MODEL;
    case ErrorCode::IoError: return PPA_ERR_IO;
    case ErrorCode::Internal: return PPA_ERR_INTERNAL;
  }
  return PPA_ERR_INTERNAL;
}

template <class Fn>
ppa_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PPA_OK;
  } catch (const ppaudio::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PPA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return PPA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return PPA_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ppaudio::Error(ErrorCode::LengthMismatch, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

json parse_json_arg(const char* text, const char* what) {
  if (!text || !*text) return json();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ppaudio::Error(ErrorCode::InvalidConfig, std::string(what) + " is not valid JSON: " + e.what());
  }
}

const std::vector<std::size_t>& partition_of(const ppa_split* split, ppa_partition p) {
  switch (p) {
    case PPA_PARTITION_TRAIN: return split->indices.train;
    case PPA_PARTITION_VALIDATION: return split->indices.validation;
    case PPA_PARTITION_TEST: return split->indices.test;
  }
  throw ppaudio::Error(ErrorCode::LengthMismatch, "unknown partition");
}

}  // namespace

extern "C" {

const char* ppa_version(void) { return PPAUDIO_VERSION; }

const char* ppa_status_name(ppa_status status) {
  switch (status) {
    case PPA_OK: return "OK";
    case PPA_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case PPA_ERR_INVALID_CONFIG: return "InvalidConfig";
    case PPA_ERR_FORBIDDEN_FEATURE: return "ForbiddenFeature";
    case PPA_ERR_UNKNOWN_FEATURE: return "UnknownFeature";
    case PPA_ERR_DEGENERATE_SPLIT: return "DegenerateSplit";
    case PPA_ERR_IO: return "IoError";
    case PPA_ERR_MISSING_FILE: return "MissingFile";
    case PPA_ERR_DECODE: return "DecodeError";
    case PPA_ERR_SAMPLE_RATE_MISMATCH: return "SampleRateMismatch";
    case PPA_ERR_EMPTY_AFTER_TRIM: return "EmptyAfterTrim";
    case PPA_ERR_MANIFEST: return "ManifestError";
    case PPA_ERR_SCHEMA_MISMATCH: return "SchemaMismatch";
    case PPA_ERR_PARSE: return "ParseError";
    case PPA_ERR_EMPTY_TABLE: return "EmptyTable";
    case PPA_ERR_VERSION_MISMATCH: return "VersionMismatch";
    case PPA_ERR_CORRUPT_MODEL: return "CorruptModel";
    case PPA_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

int ppa_status_exit_code(ppa_status status) {
  if (status == PPA_OK) return 0;
  if (status == PPA_ERR_INTERNAL) return 3;
  if (status < PPA_ERR_IO) return 1;
  if (status < PPA_ERR_INTERNAL) return 2;
  return 3;
}

const char* ppa_last_error(void) { return g_last_error.c_str(); }

void ppa_string_free(char* s) { std::free(s); }

ppa_status ppa_config_create(const char* text, ppa_config** out) {
  return guarded([&] {
    require(out != nullptr, "ppa_config_create: out is NULL");
    auto cfg = std::make_unique<ppa_config>();
    cfg->cfg = ppaudio::config_from_json(parse_json_arg(text, "config"));
    *out = cfg.release();
  });
}

ppa_status ppa_config_to_json(const ppa_config* config, char** out_json) {
  return guarded([&] {
    require(config && out_json, "ppa_config_to_json: NULL argument");
    emit(out_json, ppaudio::to_json(config->cfg).dump(2));
  });
}

void ppa_config_free(ppa_config* config) { delete config; }

ppa_status ppa_validate_features(const char* const* names, size_t count) {
  return guarded([&] {
    require(names != nullptr || count == 0, "ppa_validate_features: names is NULL");
    std::vector<std::string> list;
    for (size_t i = 0; i < count; ++i) {
      require(names[i] != nullptr, "ppa_validate_features: NULL name");
      list.emplace_back(names[i]);
    }
    ppaudio::features::FeatureSchema::from_names(list);
  });
}

ppa_status ppa_feature_names(const ppa_config* config, char** out_json) {
  return guarded([&] {
    require(config && out_json, "ppa_feature_names: NULL argument");
    emit(out_json, json(config->cfg.schema().dimension_names()).dump());
  });
}

ppa_status ppa_table_extract(const ppa_config* config, ppa_table** out, char** out_stats_json) {
  return guarded([&] {
    require(config && out, "ppa_table_extract: NULL argument");
    auto result = ppaudio::pipeline::extract_dataset(config->cfg);
    auto table = std::make_unique<ppa_table>();
    table->table = std::move(result.table);
    emit(out_stats_json, ppaudio::pipeline::stats_json(result.stats).dump(2));
    *out = table.release();
  });
}

ppa_status ppa_table_load(const char* path, const ppa_config* config, const char* class_names_json, ppa_table** out) {
  return guarded([&] {
    require(path && config && out, "ppa_table_load: NULL argument");
    std::map<int, std::string> names;
    const json j = parse_json_arg(class_names_json, "class names");
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        try {
          names[std::stoi(it.key())] = it.value().get<std::string>();
        } catch (const std::exception&) {
          throw ppaudio::Error(ErrorCode::ParseError, "class names must map integer labels to strings");
        }
      }
    }
    auto table = std::make_unique<ppa_table>();
    table->table = ppaudio::dataset::load_table(path, config->cfg.schema(), names);
    *out = table.release();
  });
}

ppa_status ppa_table_save(const ppa_table* table, const char* path) {
  return guarded([&] {
    require(table && path, "ppa_table_save: NULL argument");
    ppaudio::dataset::save_table(table->table, path);
  });
}

size_t ppa_table_rows(const ppa_table* table) { return table ? table->table.size() : 0; }

size_t ppa_table_dims(const ppa_table* table) { return table ? table->table.schema.total_dims() : 0; }

ppa_status ppa_table_row(const ppa_table* table, size_t row, double* values, size_t capacity, int* label) {
  return guarded([&] {
    require(table != nullptr, "ppa_table_row: table is NULL");
    require(row < table->table.size(), "ppa_table_row: row out of range");
    const auto& r = table->table.rows[row];
    if (values) {
      require(capacity >= r.values.size(), "ppa_table_row: capacity too small");
      std::copy(r.values.begin(), r.values.end(), values);
    }
    if (label) *label = r.label;
  });
}

ppa_status ppa_table_class_names(const ppa_table* table, char** out_json) {
  return guarded([&] {
    require(table && out_json, "ppa_table_class_names: NULL argument");
    json j = json::object();
    for (const auto& [label, name] : table->table.class_names) j[std::to_string(label)] = name;
    emit(out_json, j.dump());
  });
}

void ppa_table_free(ppa_table* table) { delete table; }

ppa_status ppa_split_create(const ppa_table* table, const ppa_config* config, ppa_split** out) {
  return guarded([&] {
    require(table && config && out, "ppa_split_create: NULL argument");
    auto split = std::make_unique<ppa_split>();
    split->spec = config->cfg.split;
    split->indices = ppaudio::dataset::split_indices(table->table, split->spec);
    split->rows = table->table.size();
    *out = split.release();
  });
}

ppa_status ppa_split_from_json(const ppa_table* table, const char* text, ppa_split** out) {
  return guarded([&] {
    require(table && text && out, "ppa_split_from_json: NULL argument");
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ppaudio::Error(ErrorCode::ParseError, std::string("split record: ") + e.what());
    }
    auto split = std::make_unique<ppa_split>();
    split->rows = table->table.size();
    split->indices = ppaudio::pipeline::split_from_json(doc, split->rows);
    try {
      split->spec.unit = ppaudio::dataset::parse_split_unit(doc.at("unit").get<std::string>());
      split->spec.seed = doc.at("seed").get<std::uint64_t>();
      const auto fr = doc.at("fractions").get<std::vector<double>>();
      if (fr.size() == 3) {
        split->spec.train_frac = fr[0];
        split->spec.val_frac = fr[1];
        split->spec.test_frac = fr[2];
      }
    } catch (const json::exception& e) {
      throw ppaudio::Error(ErrorCode::ParseError, std::string("split record: ") + e.what());
    }
    *out = split.release();
  });
}

ppa_status ppa_split_to_json(const ppa_split* split, char** out_json) {
  return guarded([&] {
    require(split && out_json, "ppa_split_to_json: NULL argument");
    emit(out_json, ppaudio::pipeline::split_json(split->indices, split->spec, split->rows).dump() + "\n");
  });
}

size_t ppa_split_size(const ppa_split* split, ppa_partition partition) {
  if (!split) return 0;
  switch (partition) {
    case PPA_PARTITION_TRAIN: return split->indices.train.size();
    case PPA_PARTITION_VALIDATION: return split->indices.validation.size();
    case PPA_PARTITION_TEST: return split->indices.test.size();
  }
  return 0;
}

ppa_status ppa_split_select(const ppa_table* table, const ppa_split* split, ppa_partition partition, ppa_table** out) {
  return guarded([&] {
    require(table && split && out, "ppa_split_select: NULL argument");
    if (split->rows != table->table.size())
      throw ppaudio::Error(ErrorCode::SchemaMismatch, "split was made for a different table");
    auto t = std::make_unique<ppa_table>();
    t->table = ppaudio::dataset::select_rows(table->table, partition_of(split, partition));
    *out = t.release();
  });
}

void ppa_split_free(ppa_split* split) { delete split; }

ppa_status ppa_model_train(const ppa_table* train, const ppa_config* config, ppa_model** out) {
  return guarded([&] {
    require(train && config && out, "ppa_model_train: NULL argument");
    const auto& cfg = config->cfg;
    if (train->table.schema_id() != cfg.schema().id())
      throw ppaudio::Error(ErrorCode::SchemaMismatch, "table schema " + train->table.schema_id() +
                                                          " does not match configured schema " + cfg.schema().id());
    auto m = std::make_unique<ppa_model>();
    m->model = ppaudio::forest::train_forest(train->table, cfg.forest, cfg.threads);
    ppaudio::pipeline::attach_extraction(m->model, cfg);
    *out = m.release();
  });
}

ppa_status ppa_model_load(const char* path, ppa_model** out) {
  return guarded([&] {
    require(path && out, "ppa_model_load: NULL argument");
    auto m = std::make_unique<ppa_model>();
    m->model = ppaudio::forest::load_model(path);
    *out = m.release();
  });
}

ppa_status ppa_model_save(const ppa_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "ppa_model_save: NULL argument");
    ppaudio::forest::save_model(model->model, path);
  });
}

size_t ppa_model_classes(const ppa_model* model) { return model ? model->model.n_classes : 0; }

size_t ppa_model_dims(const ppa_model* model) { return model ? model->model.n_features : 0; }

ppa_status ppa_model_config(const ppa_model* model, ppa_config** out) {
  return guarded([&] {
    require(model && out, "ppa_model_config: NULL argument");
    auto cfg = std::make_unique<ppa_config>();
    cfg->cfg = ppaudio::pipeline::extraction_from_model(model->model);
    *out = cfg.release();
  });
}

ppa_status ppa_model_class_names(const ppa_model* model, char** out_json) {
  return guarded([&] {
    require(model && out_json, "ppa_model_class_names: NULL argument");
    json j = json::object();
    for (std::size_t i = 0; i < model->model.class_names.size(); ++i)
      if (!model->model.class_names[i].empty()) j[std::to_string(i)] = model->model.class_names[i];
    emit(out_json, j.dump());
  });
}

ppa_status ppa_model_predict(const ppa_model* model, const double* values, size_t count, int* label, uint32_t* votes,
                             size_t votes_capacity) {
  return guarded([&] {
    require(model && values, "ppa_model_predict: NULL argument");
    if (count != model->model.n_features)
      throw ppaudio::Error(ErrorCode::SchemaMismatch, "vector has " + std::to_string(count) + " values, model expects " +
                                                          std::to_string(model->model.n_features));
    const auto p = ppaudio::forest::predict(model->model, std::span<const double>(values, count));
    if (label) *label = p.label;
    if (votes) {
      require(votes_capacity >= p.votes.size(), "ppa_model_predict: votes capacity too small");
      std::copy(p.votes.begin(), p.votes.end(), votes);
    }
  });
}

void ppa_model_free(ppa_model* model) { delete model; }

ppa_status ppa_evaluate(const ppa_model* model, const ppa_table* table, ppa_eval_level level,
                        const ppa_split* provenance, char** out_json, char** out_text, char** out_confusion_csv) {
  return guarded([&] {
    require(model && table, "ppa_evaluate: NULL argument");
    auto report = level == PPA_EVAL_CLIP ? ppaudio::eval::clip_level_evaluate(model->model, table->table)
                                         : ppaudio::eval::evaluate(model->model, table->table);
    if (provenance) {
      report.split_unit = std::string(ppaudio::dataset::to_string(provenance->spec.unit));
      report.seed = provenance->spec.seed;
    }
    emit(out_json, ppaudio::eval::to_json(report).dump(2) + "\n");
    emit(out_text, ppaudio::eval::to_text(report));
    emit(out_confusion_csv, ppaudio::eval::confusion_csv(report));
  });
}

ppa_status ppa_importance(const ppa_model* model, char** out_json, char** out_text) {
  return guarded([&] {
    require(model != nullptr, "ppa_importance: model is NULL");
    const auto schema = ppaudio::pipeline::extraction_from_model(model->model).schema();
    const auto report = ppaudio::eval::importance_report(model->model, schema);
    emit(out_json, ppaudio::eval::to_json(report).dump(2) + "\n");
    emit(out_text, ppaudio::eval::to_text(report));
  });
}

ppa_status ppa_classify_wav(const ppa_model* model, const char* path, char** out_json) {
  return guarded([&] {
    require(model && path && out_json, "ppa_classify_wav: NULL argument");
    const auto clip = ppaudio::audio::read_wav(path);
    const auto result = ppaudio::pipeline::classify_clip(model->model, clip);
    emit(out_json, ppaudio::pipeline::to_json(result).dump());
  });
}

}  // extern "C"
