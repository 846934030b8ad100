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

#include <doctest.h>

#include <json.hpp>
#include <string>

#include "ppaudio/ppaudio.h"
#include "support/synth.hpp"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  ppa_string_free(s);
  return out;
}

ppa_config* make_config(const json& doc) {
  ppa_config* cfg = nullptr;
  REQUIRE(ppa_config_create(doc.dump().c_str(), &cfg) == PPA_OK);
  return cfg;
}

}  // namespace

TEST_CASE("status plumbing") {
  CHECK(std::string(ppa_version()).size() > 0);
  CHECK(std::string(ppa_status_name(PPA_ERR_FORBIDDEN_FEATURE)) == "ForbiddenFeature");
  CHECK(ppa_status_exit_code(PPA_OK) == 0);
  CHECK(ppa_status_exit_code(PPA_ERR_INVALID_CONFIG) == 1);
  CHECK(ppa_status_exit_code(PPA_ERR_DEGENERATE_SPLIT) == 1);
  CHECK(ppa_status_exit_code(PPA_ERR_DECODE) == 2);
  CHECK(ppa_status_exit_code(PPA_ERR_CORRUPT_MODEL) == 2);
  CHECK(ppa_status_exit_code(PPA_ERR_INTERNAL) == 3);
}

TEST_CASE("config handles and the privacy guard") {
  ppa_config* cfg = nullptr;
  CHECK(ppa_config_create(nullptr, &cfg) == PPA_OK);
  char* names = nullptr;
  REQUIRE(ppa_feature_names(cfg, &names) == PPA_OK);
  CHECK(json::parse(take(names)).size() == 27);
  char* text = nullptr;
  REQUIRE(ppa_config_to_json(cfg, &text) == PPA_OK);
  CHECK(json::parse(take(text))["forest"]["n_trees"] == 100);
  ppa_config_free(cfg);

  for (const char* bad : {"mfcc", "mel_spectrogram", "stft_frames", "f0", "pitch", "formants", "linear_spectrogram"}) {
    const char* list[] = {"zcr", bad};
    CHECK(ppa_validate_features(list, 2) == PPA_ERR_FORBIDDEN_FEATURE);
    CHECK(std::string(ppa_last_error()) == std::string("ForbiddenFeature(") + bad + ")");
    ppa_config* c = nullptr;
    const json doc = {{"features", {bad}}};
    CHECK(ppa_config_create(doc.dump().c_str(), &c) == PPA_ERR_FORBIDDEN_FEATURE);
    CHECK(c == nullptr);
  }
  const char* ok[] = {"zcr", "hnr"};
  CHECK(ppa_validate_features(ok, 2) == PPA_OK);
  CHECK(std::string(ppa_last_error()).empty());

  ppa_config* c = nullptr;
  CHECK(ppa_config_create("{not json", &c) == PPA_ERR_INVALID_CONFIG);
  CHECK(ppa_config_create(R"({"forest":{"n_trees":0}})", &c) == PPA_ERR_INVALID_CONFIG);
  CHECK(ppa_config_create("{}", nullptr) == PPA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("end to end through the C API") {
  const auto dir = synth::temp_dir("capi");
  const auto corpus = synth::write_corpus(dir / "data", 3, 4, 1.5);
  ppa_config* cfg = make_config({{"audio_dir", corpus.audio_dir.string()},
                                 {"manifest_path", corpus.manifest.string()},
                                 {"threads", 2},
                                 {"split", {{"train_frac", 0.5}, {"val_frac", 0.25}, {"test_frac", 0.25}}},
                                 {"forest", {{"n_trees", 7}}}});
  ppa_table* table = nullptr;
  char* stats = nullptr;
  REQUIRE(ppa_table_extract(cfg, &table, &stats) == PPA_OK);
  const auto st = json::parse(take(stats));
  CHECK(st["clips"] == 12);
  CHECK(ppa_table_rows(table) == st["rows"].get<std::size_t>());
  CHECK(ppa_table_dims(table) == 27);

  std::vector<double> row(27);
  int label = -1;
  REQUIRE(ppa_table_row(table, 0, row.data(), row.size(), &label) == PPA_OK);
  CHECK(label == 0);
  CHECK(ppa_table_row(table, 0, row.data(), 3, &label) == PPA_ERR_INVALID_ARGUMENT);
  CHECK(ppa_table_row(table, 9999, row.data(), 27, &label) == PPA_ERR_INVALID_ARGUMENT);

  const auto csv = (dir / "features.csv").string();
  REQUIRE(ppa_table_save(table, csv.c_str()) == PPA_OK);
  char* class_names = nullptr;
  REQUIRE(ppa_table_class_names(table, &class_names) == PPA_OK);
  const std::string names = take(class_names);
  CHECK(json::parse(names)["2"] == "class2");
  ppa_table* loaded = nullptr;
  REQUIRE(ppa_table_load(csv.c_str(), cfg, names.c_str(), &loaded) == PPA_OK);
  CHECK(ppa_table_rows(loaded) == ppa_table_rows(table));

  ppa_split* split = nullptr;
  REQUIRE(ppa_split_create(loaded, cfg, &split) == PPA_OK);
  const std::size_t n = ppa_table_rows(loaded);
  CHECK(ppa_split_size(split, PPA_PARTITION_TRAIN) + ppa_split_size(split, PPA_PARTITION_VALIDATION) +
            ppa_split_size(split, PPA_PARTITION_TEST) ==
        n);
  char* split_text = nullptr;
  REQUIRE(ppa_split_to_json(split, &split_text) == PPA_OK);
  const std::string split_doc = take(split_text);
  ppa_split* reread = nullptr;
  REQUIRE(ppa_split_from_json(loaded, split_doc.c_str(), &reread) == PPA_OK);
  char* again = nullptr;
  REQUIRE(ppa_split_to_json(reread, &again) == PPA_OK);
  CHECK(take(again) == split_doc);

  ppa_table* train = nullptr;
  REQUIRE(ppa_split_select(loaded, split, PPA_PARTITION_TRAIN, &train) == PPA_OK);
  ppa_model* model = nullptr;
  REQUIRE(ppa_model_train(train, cfg, &model) == PPA_OK);
  CHECK(ppa_model_classes(model) == 3);
  CHECK(ppa_model_dims(model) == 27);

  std::vector<std::uint32_t> votes(3);
  int predicted = -1;
  REQUIRE(ppa_model_predict(model, row.data(), row.size(), &predicted, votes.data(), votes.size()) == PPA_OK);
  CHECK(votes[0] + votes[1] + votes[2] == 7);
  CHECK(ppa_model_predict(model, row.data(), 26, &predicted, nullptr, 0) == PPA_ERR_SCHEMA_MISMATCH);

  const auto model_path = (dir / "model.json").string();
  REQUIRE(ppa_model_save(model, model_path.c_str()) == PPA_OK);
  ppa_model* model2 = nullptr;
  REQUIRE(ppa_model_load(model_path.c_str(), &model2) == PPA_OK);
  ppa_config* model_cfg = nullptr;
  REQUIRE(ppa_model_config(model2, &model_cfg) == PPA_OK);
  char* fn = nullptr;
  REQUIRE(ppa_feature_names(model_cfg, &fn) == PPA_OK);
  CHECK(json::parse(take(fn)).size() == 27);
  char* mnames = nullptr;
  REQUIRE(ppa_model_class_names(model2, &mnames) == PPA_OK);
  CHECK(json::parse(take(mnames)) == json::parse(names));

  ppa_table* test = nullptr;
  REQUIRE(ppa_split_select(loaded, split, PPA_PARTITION_TEST, &test) == PPA_OK);
  char *ej = nullptr, *et = nullptr, *ec = nullptr;
  REQUIRE(ppa_evaluate(model2, test, PPA_EVAL_WINDOW, split, &ej, &et, &ec) == PPA_OK);
  const auto report = json::parse(take(ej));
  CHECK(report["split_unit"] == "window");
  CHECK(report["n_rows"] == ppa_table_rows(test));
  CHECK(take(et).find("accuracy") != std::string::npos);
  CHECK(!take(ec).empty());
  REQUIRE(ppa_evaluate(model2, test, PPA_EVAL_CLIP, nullptr, &ej, nullptr, nullptr) == PPA_OK);
  CHECK(json::parse(take(ej))["level"] == "clip");

  char *ij = nullptr, *it = nullptr;
  REQUIRE(ppa_importance(model2, &ij, &it) == PPA_OK);
  CHECK(json::parse(take(ij))["per_family"].size() == 10);
  ppa_string_free(it);

  char* cj = nullptr;
  const auto wav = (corpus.audio_dir / "1-1000-A-0-0.wav").string();
  REQUIRE(ppa_classify_wav(model2, wav.c_str(), &cj) == PPA_OK);
  CHECK(json::parse(take(cj)).contains("category"));
  CHECK(ppa_classify_wav(model2, "/no/such.wav", &cj) == PPA_ERR_MISSING_FILE);

  const auto silent = (dir / "silent.wav").string();
  synth::write_wav16(silent, synth::zeros(1.0, 22050), 22050);
  CHECK(ppa_classify_wav(model2, silent.c_str(), &cj) == PPA_ERR_EMPTY_AFTER_TRIM);
  CHECK(std::string(ppa_last_error()) == "no signal after silence trim");

  CHECK(ppa_model_load(csv.c_str(), &model2) != PPA_OK);

  ppa_table_free(test);
  ppa_config_free(model_cfg);
  ppa_model_free(model2);
  ppa_model_free(model);
  ppa_table_free(train);
  ppa_split_free(reread);
  ppa_split_free(split);
  ppa_table_free(loaded);
  ppa_table_free(table);
  ppa_config_free(cfg);
}

TEST_CASE("data errors map to data statuses") {
  const auto dir = synth::temp_dir("capi_errors");
  const auto corpus = synth::write_corpus(dir, 2, 1, 1.0);
  ppa_config* cfg = make_config({{"audio_dir", (dir / "nowhere").string()}, {"manifest_path", corpus.manifest.string()}});
  ppa_table* t = nullptr;
  CHECK(ppa_table_extract(cfg, &t, nullptr) == PPA_ERR_MISSING_FILE);
  CHECK(std::string(ppa_last_error()).find(".wav") != std::string::npos);
  ppa_config_free(cfg);

  std::ofstream(dir / "bad.csv") << "filename,fold\nx.wav,1\n";
  cfg = make_config({{"audio_dir", corpus.audio_dir.string()}, {"manifest_path", (dir / "bad.csv").string()}});
  CHECK(ppa_table_extract(cfg, &t, nullptr) == PPA_ERR_MANIFEST);
  ppa_config_free(cfg);

  ppa_model* m = nullptr;
  std::ofstream(dir / "trunc.json") << "{\"format_version\": 1, \"trees\": [";
  CHECK(ppa_model_load((dir / "trunc.json").string().c_str(), &m) == PPA_ERR_CORRUPT_MODEL);
  std::ofstream(dir / "v99.json") << R"({"format_version": 99})";
  CHECK(ppa_model_load((dir / "v99.json").string().c_str(), &m) == PPA_ERR_VERSION_MISMATCH);
}
