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

#include "ppaudio/config.hpp"

#include <set>

#include "ppaudio/error.hpp"

namespace ppaudio {
namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {
    if (!doc_.is_object()) fail(ErrorCode::InvalidConfig, "config section '" + name_ + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::InvalidConfig, "config key '" + path(key) + "' has the wrong type");
    }
  }

  void read_optional_size(const char* key, std::size_t& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    if (it->is_null()) {
      out = 0;
      return;
    }
    read(key, out);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!seen_.count(it.key())) fail(ErrorCode::InvalidConfig, "unknown config key '" + path(it.key()) + "'");
  }

 private:
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const json& doc_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_path(Section& s, const char* key, std::filesystem::path& out) {
  std::string v = out.string();
  s.read(key, v);
  out = v;
}

}  // namespace

RunConfig::RunConfig() {
  for (auto name : features::kPrivacyAllowlist) features.emplace_back(name);
}

features::FeatureSchema RunConfig::schema() const {
  return features::FeatureSchema::from_names(features, spectral.contrast_bands);
}

dataset::BuildOptions RunConfig::build_options() const {
  dataset::BuildOptions o;
  o.trim = trim;
  o.window = window;
  o.spectral = spectral;
  o.schema = schema();
  o.threads = threads;
  return o;
}

void RunConfig::validate() const {
  trim.validate();
  window.validate();
  spectral.validate();
  split.validate();
  const auto s = schema();
  forest.validate(s.total_dims());
}

RunConfig config_from_json(const json& doc) {
  RunConfig cfg;
  if (doc.is_null()) return cfg;
  Section top(doc, "");
  read_path(top, "audio_dir", cfg.audio_dir);
  read_path(top, "manifest_path", cfg.manifest_path);
  read_path(top, "output_dir", cfg.output_dir);
  top.read("features", cfg.features);
  top.read("threads", cfg.threads);
  if (const json* j = top.child("trim")) {
    Section s(*j, "trim");
    s.read("top_db", cfg.trim.top_db);
    s.read("frame_len", cfg.trim.frame_len);
    s.read("hop_len", cfg.trim.hop_len);
    s.finish();
  }
  if (const json* j = top.child("window")) {
    Section s(*j, "window");
    s.read("window_ms", cfg.window.window_ms);
    s.read("hop_ms", cfg.window.hop_ms);
    s.finish();
  }
  if (const json* j = top.child("spectral")) {
    Section s(*j, "spectral");
    s.read("frame_len", cfg.spectral.frame_len);
    s.read("frame_hop", cfg.spectral.frame_hop);
    std::string taper(features::to_string(cfg.spectral.window_fn));
    s.read("window_fn", taper);
    cfg.spectral.window_fn = features::parse_taper(taper);
    s.read("contrast_bands", cfg.spectral.contrast_bands);
    s.read("contrast_fmin", cfg.spectral.contrast_fmin);
    s.read("contrast_alpha", cfg.spectral.contrast_alpha);
    s.read("rolloff_pct", cfg.spectral.rolloff_pct);
    s.read("hnr_fmin", cfg.spectral.hnr_fmin);
    s.read("hnr_fmax", cfg.spectral.hnr_fmax);
    s.read("hnr_cap_db", cfg.spectral.hnr_cap_db);
    s.read("power_floor", cfg.spectral.power_floor);
    s.finish();
  }
  if (const json* j = top.child("split")) {
    Section s(*j, "split");
    s.read("train_frac", cfg.split.train_frac);
    s.read("val_frac", cfg.split.val_frac);
    s.read("test_frac", cfg.split.test_frac);
    s.read("seed", cfg.split.seed);
    std::string unit(dataset::to_string(cfg.split.unit));
    s.read("unit", unit);
    cfg.split.unit = dataset::parse_split_unit(unit);
    s.finish();
  }
  if (const json* j = top.child("forest")) {
    Section s(*j, "forest");
    s.read("n_trees", cfg.forest.n_trees);
    s.read_optional_size("max_depth", cfg.forest.max_depth);
    s.read("min_samples_leaf", cfg.forest.min_samples_leaf);
    s.read("min_samples_split", cfg.forest.min_samples_split);
    s.read_optional_size("mtry", cfg.forest.mtry);
    s.read("bootstrap", cfg.forest.bootstrap);
    s.read("seed", cfg.forest.seed);
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

json extraction_json(const RunConfig& cfg) {
  const auto& sp = cfg.spectral;
  return json{{"features", cfg.features},
              {"trim", {{"top_db", cfg.trim.top_db}, {"frame_len", cfg.trim.frame_len}, {"hop_len", cfg.trim.hop_len}}},
              {"window", {{"window_ms", cfg.window.window_ms}, {"hop_ms", cfg.window.hop_ms}}},
              {"spectral",
               {{"frame_len", sp.frame_len},
                {"frame_hop", sp.frame_hop},
                {"window_fn", features::to_string(sp.window_fn)},
                {"contrast_bands", sp.contrast_bands},
                {"contrast_fmin", sp.contrast_fmin},
                {"contrast_alpha", sp.contrast_alpha},
                {"rolloff_pct", sp.rolloff_pct},
                {"hnr_fmin", sp.hnr_fmin},
                {"hnr_fmax", sp.hnr_fmax},
                {"hnr_cap_db", sp.hnr_cap_db},
                {"power_floor", sp.power_floor}}}};
}

json to_json(const RunConfig& cfg) {
  json doc = extraction_json(cfg);
  doc["audio_dir"] = cfg.audio_dir.string();
  doc["manifest_path"] = cfg.manifest_path.string();
  doc["output_dir"] = cfg.output_dir.string();
  doc["threads"] = cfg.threads;
  doc["split"] = {{"train_frac", cfg.split.train_frac},
                  {"val_frac", cfg.split.val_frac},
                  {"test_frac", cfg.split.test_frac},
                  {"seed", cfg.split.seed},
                  {"unit", dataset::to_string(cfg.split.unit)}};
  const auto& f = cfg.forest;
  doc["forest"] = {{"n_trees", f.n_trees},
                   {"max_depth", f.max_depth == 0 ? json(nullptr) : json(f.max_depth)},
                   {"min_samples_leaf", f.min_samples_leaf},
                   {"min_samples_split", f.min_samples_split},
                   {"mtry", f.mtry == 0 ? json(nullptr) : json(f.mtry)},
                   {"bootstrap", f.bootstrap},
                   {"seed", f.seed}};
  return doc;
}

}  // namespace ppaudio
