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

// Command-line front end. Talks to the library only through ppaudio.h.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppaudio/ppaudio.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Failure : public std::exception {
 public:
  Failure(int exit_code, std::string message) : exit_code_(exit_code), message_(std::move(message)) {}
  const char* what() const noexcept override { return message_.c_str(); }
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
  std::string message_;
};

void check(ppa_status status) {
  if (status != PPA_OK) throw Failure(ppa_status_exit_code(status), ppa_last_error());
}

struct StringDeleter {
  void operator()(char* s) const { ppa_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::string take(char* s) {
  OwnedString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

template <class T, void (*Free)(T*)>
struct HandleDeleter {
  void operator()(T* h) const { Free(h); }
};
using Config = std::unique_ptr<ppa_config, HandleDeleter<ppa_config, ppa_config_free>>;
using Table = std::unique_ptr<ppa_table, HandleDeleter<ppa_table, ppa_table_free>>;
using Split = std::unique_ptr<ppa_split, HandleDeleter<ppa_split, ppa_split_free>>;
using Model = std::unique_ptr<ppa_model, HandleDeleter<ppa_model, ppa_model_free>>;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(2, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure(2, path.string() + ": cannot write file");
}

json parse_json_file(const fs::path& path, int exit_code) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Failure(exit_code, path.string() + ": " + e.what());
  }
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure(2, dir.string() + ": " + ec.message());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// Flat flag overrides applied on top of the JSON config file.
struct Overrides {
  std::string config_file;
  std::optional<std::string> dataset_dir, audio_dir, manifest, output_dir, features, split_unit, taper;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed, split_seed, forest_seed;
  std::optional<std::size_t> n_trees, max_depth, mtry, min_samples_leaf, min_samples_split;
  std::optional<double> window_ms, hop_ms, top_db, train_frac, val_frac, test_frac;
  bool no_bootstrap = false;

  void add_paths(CLI::App& app) {
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--dataset-dir", dataset_dir, "ESC-50 root holding audio/ and meta/esc50.csv");
    app.add_option("--audio-dir", audio_dir, "directory of WAV files");
    app.add_option("--manifest", manifest, "manifest CSV (filename,fold,target,category)");
  }
  void add_output(CLI::App& app) { app.add_option("-o,--output-dir", output_dir, "output directory"); }
  void add_threads(CLI::App& app) { app.add_option("--threads", threads, "worker threads, 0 = all cores"); }
  void add_extraction(CLI::App& app) {
    app.add_option("--features", features, "comma-separated feature families");
    app.add_option("--window-ms", window_ms, "analysis window length in ms");
    app.add_option("--hop-ms", hop_ms, "analysis window hop in ms");
    app.add_option("--top-db", top_db, "silence threshold below the loudest frame, dB");
    app.add_option("--taper", taper, "spectral taper: hann, hamming or rectangular");
  }
  void add_training(CLI::App& app) {
    app.add_option("--seed", seed, "seed for both the split and the forest");
    app.add_option("--split-seed", split_seed, "split seed");
    app.add_option("--forest-seed", forest_seed, "forest seed");
    app.add_option("--split-unit", split_unit, "window or clip");
    app.add_option("--train-frac", train_frac, "train fraction");
    app.add_option("--val-frac", val_frac, "validation fraction");
    app.add_option("--test-frac", test_frac, "test fraction");
    app.add_option("--n-trees", n_trees, "number of trees");
    app.add_option("--max-depth", max_depth, "maximum tree depth, 0 = unbounded");
    app.add_option("--mtry", mtry, "features tried per split, 0 = floor(sqrt(d))");
    app.add_option("--min-samples-leaf", min_samples_leaf, "minimum samples per leaf");
    app.add_option("--min-samples-split", min_samples_split, "minimum samples to split a node");
    app.add_flag("--no-bootstrap", no_bootstrap, "train every tree on all rows");
  }

  json apply() const {
    json doc = json::object();
    if (!config_file.empty()) {
      doc = parse_json_file(config_file, 1);
      if (!doc.is_object()) throw Failure(1, config_file + ": config must be a JSON object");
    }
    if (dataset_dir) {
      doc["audio_dir"] = (fs::path(*dataset_dir) / "audio").string();
      doc["manifest_path"] = (fs::path(*dataset_dir) / "meta" / "esc50.csv").string();
    }
    if (audio_dir) doc["audio_dir"] = *audio_dir;
    if (manifest) doc["manifest_path"] = *manifest;
    if (output_dir) doc["output_dir"] = *output_dir;
    if (features) doc["features"] = split_list(*features);
    if (threads) doc["threads"] = *threads;
    if (window_ms) doc["window"]["window_ms"] = *window_ms;
    if (hop_ms) doc["window"]["hop_ms"] = *hop_ms;
    if (top_db) doc["trim"]["top_db"] = *top_db;
    if (taper) doc["spectral"]["window_fn"] = *taper;
    if (seed) {
      doc["split"]["seed"] = *seed;
      doc["forest"]["seed"] = *seed;
    }
    if (split_seed) doc["split"]["seed"] = *split_seed;
    if (forest_seed) doc["forest"]["seed"] = *forest_seed;
    if (split_unit) doc["split"]["unit"] = *split_unit;
    if (train_frac) doc["split"]["train_frac"] = *train_frac;
    if (val_frac) doc["split"]["val_frac"] = *val_frac;
    if (test_frac) doc["split"]["test_frac"] = *test_frac;
    if (n_trees) doc["forest"]["n_trees"] = *n_trees;
    if (max_depth) doc["forest"]["max_depth"] = *max_depth == 0 ? json(nullptr) : json(*max_depth);
    if (mtry) doc["forest"]["mtry"] = *mtry == 0 ? json(nullptr) : json(*mtry);
    if (min_samples_leaf) doc["forest"]["min_samples_leaf"] = *min_samples_leaf;
    if (min_samples_split) doc["forest"]["min_samples_split"] = *min_samples_split;
    if (no_bootstrap) doc["forest"]["bootstrap"] = false;
    return doc;
  }

  Config make_config() const {
    ppa_config* raw = nullptr;
    check(ppa_config_create(apply().dump().c_str(), &raw));
    return Config(raw);
  }
};

json config_json(const ppa_config* cfg) {
  char* text = nullptr;
  check(ppa_config_to_json(cfg, &text));
  return json::parse(take(text));
}

fs::path output_dir_of(const ppa_config* cfg) {
  const std::string dir = config_json(cfg).value("output_dir", std::string());
  return dir.empty() ? fs::path(".") : fs::path(dir);
}

// Class names live in the run manifest written next to features.csv.
std::string sidecar_class_names(const fs::path& table_path, const std::string& explicit_file) {
  if (!explicit_file.empty()) {
    json j = parse_json_file(explicit_file, 2);
    if (j.contains("class_names")) j = j["class_names"];
    return j.dump();
  }
  const fs::path manifest = table_path.parent_path() / "run_manifest.json";
  if (!fs::exists(manifest)) return "{}";
  const json j = parse_json_file(manifest, 2);
  return j.contains("class_names") ? j["class_names"].dump() : "{}";
}

Table load_table(const fs::path& path, const ppa_config* cfg, const std::string& class_names) {
  ppa_table* raw = nullptr;
  check(ppa_table_load(path.string().c_str(), cfg, class_names.c_str(), &raw));
  return Table(raw);
}

Table select(const ppa_table* table, const ppa_split* split, ppa_partition part) {
  ppa_table* raw = nullptr;
  check(ppa_split_select(table, split, part, &raw));
  return Table(raw);
}

struct ExtractOutput {
  Table table;
  json manifest;
};

ExtractOutput do_extract(const ppa_config* cfg, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  make_dir(out_dir);
  ppa_table* raw = nullptr;
  char* stats_text = nullptr;
  check(ppa_table_extract(cfg, &raw, &stats_text));
  Table table(raw);
  const json stats = json::parse(take(stats_text));
  for (const auto& f : stats["skipped_files"]) std::cerr << "warning: " << f.get<std::string>() << ": no signal after silence trim, skipped\n";
  const fs::path csv = out_dir / "features.csv";
  check(ppa_table_save(table.get(), csv.string().c_str()));

  char* names = nullptr;
  check(ppa_table_class_names(table.get(), &names));
  const json cfg_doc = config_json(cfg);
  json manifest = {{"tool", "ppaudio"},
                   {"version", ppa_version()},
                   {"stage_order", stats["stage_order"]},
                   {"config", cfg_doc},
                   {"seed", {{"split", cfg_doc["split"]["seed"]}, {"forest", cfg_doc["forest"]["seed"]}}},
                   {"stats", stats},
                   {"rows", stats["rows"]},
                   {"clips_skipped", stats["clips_skipped"]},
                   {"class_names", json::parse(take(names))}};
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["extract_wall_seconds"] = secs;
  write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

  std::cout << "rows=" << stats["rows"] << " clips=" << stats["clips"] << " clips_skipped=" << stats["clips_skipped"]
            << " dims=" << ppa_table_dims(table.get()) << " features=" << csv.string() << "\n";
  return {std::move(table), std::move(manifest)};
}

struct TrainOutput {
  Split split;
  Model model;
};

TrainOutput do_train(const ppa_table* table, const ppa_config* cfg, const fs::path& out_dir) {
  make_dir(out_dir);
  ppa_split* split_raw = nullptr;
  check(ppa_split_create(table, cfg, &split_raw));
  Split split(split_raw);
  char* split_text = nullptr;
  check(ppa_split_to_json(split.get(), &split_text));
  write_text(out_dir / "split.json", take(split_text));

  Table train = select(table, split.get(), PPA_PARTITION_TRAIN);
  ppa_model* model_raw = nullptr;
  check(ppa_model_train(train.get(), cfg, &model_raw));
  Model model(model_raw);
  const fs::path model_path = out_dir / "model.json";
  check(ppa_model_save(model.get(), model_path.string().c_str()));
  std::cout << "train_rows=" << ppa_split_size(split.get(), PPA_PARTITION_TRAIN)
            << " validation_rows=" << ppa_split_size(split.get(), PPA_PARTITION_VALIDATION)
            << " test_rows=" << ppa_split_size(split.get(), PPA_PARTITION_TEST) << " model=" << model_path.string()
            << "\n";
  return {std::move(split), std::move(model)};
}

struct EvalSummary {
  double window_accuracy = 0.0;
  double clip_accuracy = 0.0;
  json top_families;
};

EvalSummary do_evaluate(const ppa_model* model, const ppa_table* table, const ppa_split* provenance,
                        const fs::path& out_dir, const std::string& partition, bool quiet_text) {
  make_dir(out_dir);
  EvalSummary summary;
  char *json_text = nullptr, *text = nullptr, *confusion = nullptr;
  check(ppa_evaluate(model, table, PPA_EVAL_WINDOW, provenance, &json_text, &text, &confusion));
  const std::string window_json = take(json_text);
  const std::string window_text = take(text);
  write_text(out_dir / "eval_window.json", window_json);
  write_text(out_dir / "confusion_window.csv", take(confusion));
  summary.window_accuracy = json::parse(window_json)["accuracy"].get<double>();

  check(ppa_evaluate(model, table, PPA_EVAL_CLIP, provenance, &json_text, &text, &confusion));
  const std::string clip_json = take(json_text);
  const std::string clip_text = take(text);
  write_text(out_dir / "eval_clip.json", clip_json);
  write_text(out_dir / "confusion_clip.csv", take(confusion));
  const json clip_doc = json::parse(clip_json);
  summary.clip_accuracy = clip_doc["accuracy"].get<double>();

  check(ppa_importance(model, &json_text, &text));
  const std::string imp_json = take(json_text);
  const std::string imp_text = take(text);
  write_text(out_dir / "importance.json", imp_json);
  const json imp = json::parse(imp_json);
  summary.top_families = json::array();
  for (std::size_t i = 0; i < imp["per_family"].size() && i < 3; ++i)
    summary.top_families.push_back(imp["per_family"][i]["name"]);

  if (!quiet_text) std::cout << window_text << clip_text << imp_text;
  std::string unit = "none";
  if (provenance) {
    char* s = nullptr;
    check(ppa_split_to_json(provenance, &s));
    unit = json::parse(take(s))["unit"].get<std::string>();
  }
  std::string top;
  for (const auto& f : summary.top_families) top += (top.empty() ? "" : ",") + f.get<std::string>();
  std::cout << "split_unit=" << unit << " partition=" << partition << " window_accuracy=" << summary.window_accuracy
            << " clip_accuracy=" << summary.clip_accuracy << " clips=" << clip_doc["n_rows"]
            << " top_families=" << top << "\n";
  return summary;
}

// Validation partition, reported next to test but never used for selection.
double write_validation(const ppa_model* model, const ppa_table* table, const ppa_split* split,
                        const fs::path& out_dir) {
  const Table validation = select(table, split, PPA_PARTITION_VALIDATION);
  char* text = nullptr;
  check(ppa_evaluate(model, validation.get(), PPA_EVAL_WINDOW, split, &text, nullptr, nullptr));
  const std::string doc = take(text);
  write_text(out_dir / "eval_validation.json", doc);
  return json::parse(doc)["accuracy"].get<double>();
}

Model load_model(const std::string& path) {
  ppa_model* raw = nullptr;
  check(ppa_model_load(path.c_str(), &raw));
  return Model(raw);
}

std::optional<ppa_partition> parse_partition(const std::string& s) {
  if (s == "train") return PPA_PARTITION_TRAIN;
  if (s == "validation") return PPA_PARTITION_VALIDATION;
  if (s == "test") return PPA_PARTITION_TEST;
  if (s == "all") return std::nullopt;
  throw Failure(1, "--partition must be train, validation, test or all");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Environmental sound classification from speech-free features"};
  app.set_version_flag("--version", std::string(ppa_version()));
  app.require_subcommand(1);

  Overrides ov_extract, ov_train, ov_run;
  auto* extract = app.add_subcommand("extract", "decode, trim, window and extract features into features.csv");
  ov_extract.add_paths(*extract);
  ov_extract.add_output(*extract);
  ov_extract.add_threads(*extract);
  ov_extract.add_extraction(*extract);

  auto* train = app.add_subcommand("train", "split a feature table and train a forest");
  std::string train_table, train_class_names;
  train->add_option("--table", train_table, "features.csv from extract")->required()->check(CLI::ExistingFile);
  train->add_option("--class-names", train_class_names, "JSON file with class names (default: run_manifest.json beside the table)");
  train->add_option("--config", ov_train.config_file, "JSON config file")->check(CLI::ExistingFile);
  train->add_option("--features", ov_train.features, "comma-separated feature families of the table");
  ov_train.add_output(*train);
  ov_train.add_threads(*train);
  ov_train.add_training(*train);

  auto* evaluate = app.add_subcommand("evaluate", "score a model on a feature table");
  std::string eval_model, eval_table, eval_split, eval_out = ".", eval_partition = "test";
  evaluate->add_option("--model", eval_model, "model.json")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--table", eval_table, "features.csv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--split", eval_split, "split.json from train")->check(CLI::ExistingFile);
  evaluate->add_option("--partition", eval_partition, "train, validation, test or all")->capture_default_str();
  evaluate->add_option("-o,--output-dir", eval_out, "output directory")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "classify WAV files by majority vote over windows");
  std::string predict_model;
  std::vector<std::string> predict_wavs;
  predict->add_option("--model", predict_model, "model.json")->required()->check(CLI::ExistingFile);
  predict->add_option("wav", predict_wavs, "WAV files")->required();

  auto* run = app.add_subcommand("run", "extract, train and evaluate in one pass");
  bool primary_only = false;
  ov_run.add_paths(*run);
  ov_run.add_output(*run);
  ov_run.add_threads(*run);
  ov_run.add_extraction(*run);
  ov_run.add_training(*run);
  run->add_flag("--primary-only", primary_only, "skip the comparison run with the other split unit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*extract) {
    const Config cfg = ov_extract.make_config();
    do_extract(cfg.get(), output_dir_of(cfg.get()));
    return 0;
  }

  if (*train) {
    const Config cfg = ov_train.make_config();
    const Table table = load_table(train_table, cfg.get(), sidecar_class_names(train_table, train_class_names));
    do_train(table.get(), cfg.get(), output_dir_of(cfg.get()));
    return 0;
  }

  if (*evaluate) {
    const Model model = load_model(eval_model);
    ppa_config* cfg_raw = nullptr;
    check(ppa_model_config(model.get(), &cfg_raw));
    const Config cfg(cfg_raw);
    char* names = nullptr;
    check(ppa_model_class_names(model.get(), &names));
    const Table table = load_table(eval_table, cfg.get(), take(names));
    const auto part = parse_partition(eval_partition);
    Split split;
    if (!eval_split.empty()) {
      ppa_split* raw = nullptr;
      check(ppa_split_from_json(table.get(), read_text(eval_split).c_str(), &raw));
      split.reset(raw);
    } else if (part) {
      throw Failure(1, "--partition " + eval_partition + " needs --split");
    }
    if (split && part) {
      const Table subset = select(table.get(), split.get(), *part);
      do_evaluate(model.get(), subset.get(), split.get(), eval_out, eval_partition, false);
    } else {
      do_evaluate(model.get(), table.get(), split.get(), eval_out, "all", false);
    }
    return 0;
  }

  if (*predict) {
    const Model model = load_model(predict_model);
    for (const auto& wav : predict_wavs) {
      char* text = nullptr;
      const ppa_status st = ppa_classify_wav(model.get(), wav.c_str(), &text);
      if (st == PPA_ERR_EMPTY_AFTER_TRIM) throw Failure(ppa_status_exit_code(st), wav + ": no signal after silence trim");
      check(st);
      const json r = json::parse(take(text));
      std::string votes;
      for (auto it = r["votes"].begin(); it != r["votes"].end(); ++it)
        votes += (votes.empty() ? "" : ",") + it.key() + ":" + std::to_string(it.value().get<std::size_t>());
      std::cout << "file=" << wav << " category=" << r["category"].get<std::string>() << " label=" << r["label"]
                << " windows=" << r["windows"] << " votes=" << votes << "\n";
    }
    return 0;
  }

  if (*run) {
    const auto t0 = std::chrono::steady_clock::now();
    const Config cfg = ov_run.make_config();
    const fs::path out_dir = output_dir_of(cfg.get());
    ExtractOutput ex = do_extract(cfg.get(), out_dir);
    TrainOutput tr = do_train(ex.table.get(), cfg.get(), out_dir);
    const Table test = select(ex.table.get(), tr.split.get(), PPA_PARTITION_TEST);
    const EvalSummary primary = do_evaluate(tr.model.get(), test.get(), tr.split.get(), out_dir, "test", true);
    const double primary_val = write_validation(tr.model.get(), ex.table.get(), tr.split.get(), out_dir);
    const json cfg_doc = config_json(cfg.get());
    const std::string unit = cfg_doc["split"]["unit"].get<std::string>();
    json summary = {{"rows", ppa_table_rows(ex.table.get())},
                    {unit + "_split",
                     {{"window_accuracy", primary.window_accuracy},
                      {"clip_accuracy", primary.clip_accuracy},
                      {"validation_window_accuracy", primary_val},
                      {"top_families", primary.top_families}}}};
    if (!primary_only) {
      const std::string other = unit == "window" ? "clip" : "window";
      json doc = ov_run.apply();
      doc["split"]["unit"] = other;
      ppa_config* raw = nullptr;
      check(ppa_config_create(doc.dump().c_str(), &raw));
      const Config other_cfg(raw);
      const fs::path other_dir = out_dir / (other + "_split");
      TrainOutput tr2 = do_train(ex.table.get(), other_cfg.get(), other_dir);
      const Table test2 = select(ex.table.get(), tr2.split.get(), PPA_PARTITION_TEST);
      const EvalSummary second = do_evaluate(tr2.model.get(), test2.get(), tr2.split.get(), other_dir, "test", true);
      const double second_val = write_validation(tr2.model.get(), ex.table.get(), tr2.split.get(), other_dir);
      summary[other + "_split"] = {{"window_accuracy", second.window_accuracy},
                                   {"clip_accuracy", second.clip_accuracy},
                                   {"validation_window_accuracy", second_val},
                                   {"top_families", second.top_families}};
    }
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    ex.manifest["run_wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out_dir / "run_manifest.json", ex.manifest.dump(2) + "\n");
    std::cout << "summary=" << (out_dir / "summary.json").string() << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << "\n";
    return f.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
}
