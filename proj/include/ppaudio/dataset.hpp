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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppaudio/audio_io.hpp"
#include "ppaudio/features.hpp"

namespace ppaudio::dataset {

struct ManifestRow {
  std::string filename;
  int fold = 0;
  int target = 0;
  std::string category;
};

struct Manifest {
  std::vector<ManifestRow> rows;

  std::map<int, std::string> class_names() const;
};

inline constexpr int kMaxTarget = 49;

/// ESC-50 style metadata CSV. Extra columns are ignored.
/// Throws MissingColumn, BadLabel, DuplicateFilename or ParseError.
Manifest load_manifest(std::string_view csv);
Manifest read_manifest(const std::filesystem::path& path);

struct TableRow {
  std::string clip_id;
  int label = 0;
  std::vector<double> values;
};

struct FeatureTable {
  features::FeatureSchema schema;
  std::vector<TableRow> rows;
  std::map<int, std::string> class_names;

  std::string schema_id() const { return schema.id(); }
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

struct BuildOptions {
  audio::TrimConfig trim;
  audio::WindowConfig window;
  features::SpectralConfig spectral;
  features::FeatureSchema schema = features::FeatureSchema::default_schema();
  unsigned threads = 1;
};

struct BuildStats {
  std::size_t clips = 0;
  std::size_t clips_used = 0;
  std::size_t clips_skipped = 0;
  std::vector<std::string> skipped_files;
  std::size_t rows = 0;
  int sample_rate = 0;
  std::vector<std::size_t> windows_per_clip;  // manifest order, 0 for skipped clips
};

/// decode -> trim_silence -> segment -> extract for every clip, one row per
/// window, rows in (manifest order, window index). Clips that are silent
/// throughout are skipped and counted. Output is independent of `threads`.
FeatureTable build_feature_table(const Manifest& manifest, const std::filesystem::path& audio_dir,
                                 const BuildOptions& options, BuildStats* stats = nullptr);

/// Rows for a single clip; shared by the table builder and single-file prediction.
std::vector<features::FeatureVector> clip_feature_vectors(const audio::AudioClip& clip,
                                                          const BuildOptions& options);

enum class SplitUnit { Window, Clip };

std::string_view to_string(SplitUnit unit);
SplitUnit parse_split_unit(std::string_view name);

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 42;
  SplitUnit unit = SplitUnit::Window;

  void validate() const;
};

/// Row indices into the source table, in shuffled order.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Throws DegenerateSplit when a partition would be empty.
SplitIndices split_indices(const FeatureTable& table, const SplitSpec& spec);

struct SplitTables {
  FeatureTable train;
  FeatureTable validation;
  FeatureTable test;
};

FeatureTable select_rows(const FeatureTable& table, std::span<const std::size_t> indices);
SplitTables split(const FeatureTable& table, const SplitSpec& spec);

/// CSV: clip_id,label,<one column per schema dimension>. Values are written in
/// shortest round-trip form, so load(save(t)) reproduces t exactly.
std::string format_table(const FeatureTable& table);
void save_table(const FeatureTable& table, const std::filesystem::path& path);

/// Validates the header against `schema`. Class names default to "class_<label>".
FeatureTable parse_table(std::string_view csv, const features::FeatureSchema& schema,
                         const std::map<int, std::string>& class_names = {});
FeatureTable load_table(const std::filesystem::path& path, const features::FeatureSchema& schema,
                        const std::map<int, std::string>& class_names = {});

// Small CSV helpers, exposed for the manifest and table tests.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);
std::string format_double(double v);

}  // namespace ppaudio::dataset
