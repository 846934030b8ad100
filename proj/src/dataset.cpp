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

#include "ppaudio/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ppaudio/error.hpp"
#include "ppaudio/parallel.hpp"
#include "ppaudio/rng.hpp"

namespace ppaudio::dataset {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  const std::string t = trim(s);
  T value{};
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && t.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return value;
}

std::size_t cut(double frac, std::size_t n) {
  // Guard against 0.85 * 100 landing at 84.99999999999999.
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

struct ClipResult {
  std::vector<TableRow> rows;
  int sample_rate = 0;
  bool skipped = false;
  std::optional<Error> error;
};

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
      if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
      record.clear();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) fail(ErrorCode::ParseError, "csv: unterminated quoted field");
  if (field_started || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorCode::Internal, "cannot format double");
  return std::string(buf, ptr);
}

std::map<int, std::string> Manifest::class_names() const {
  std::map<int, std::string> names;
  for (const auto& r : rows) names.emplace(r.target, r.category);
  return names;
}

Manifest load_manifest(std::string_view csv) {
  const auto records = parse_csv(csv);
  if (records.empty()) fail(ErrorCode::MissingColumn, "manifest: no header row");
  const auto& header = records.front();
  auto column = [&](const char* name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    fail(ErrorCode::MissingColumn, std::string("manifest: missing column '") + name + "'");
  };
  const std::size_t c_file = column("filename");
  const std::size_t c_fold = column("fold");
  const std::size_t c_target = column("target");
  const std::size_t c_category = column("category");
  const std::size_t width = std::max({c_file, c_fold, c_target, c_category}) + 1;

  Manifest m;
  std::set<std::string> seen;
  std::map<int, std::string> categories;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string line = "manifest line " + std::to_string(r + 1);
    if (rec.size() < width) fail(ErrorCode::ParseError, line + ": too few fields");
    ManifestRow row;
    row.filename = trim(rec[c_file]);
    row.category = trim(rec[c_category]);
    if (row.filename.empty()) fail(ErrorCode::ParseError, line + ": empty filename");
    const auto fold = parse_number<int>(rec[c_fold]);
    if (!fold) fail(ErrorCode::ParseError, line + ": fold is not an integer");
    row.fold = *fold;
    const auto target = parse_number<int>(rec[c_target]);
    if (!target || *target < 0 || *target > kMaxTarget)
      fail(ErrorCode::BadLabel, line + ": target '" + trim(rec[c_target]) + "' outside 0-" +
                                    std::to_string(kMaxTarget));
    row.target = *target;
    if (!seen.insert(row.filename).second)
      fail(ErrorCode::DuplicateFilename, line + ": duplicate filename " + row.filename);
    auto [it, inserted] = categories.emplace(row.target, row.category);
    if (!inserted && it->second != row.category)
      fail(ErrorCode::BadLabel, line + ": target " + std::to_string(row.target) + " has categories '" +
                                    it->second + "' and '" + row.category + "'");
    m.rows.push_back(std::move(row));
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return load_manifest(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<features::FeatureVector> clip_feature_vectors(const audio::AudioClip& clip,
                                                          const BuildOptions& options) {
  const audio::AudioClip trimmed = audio::trim_silence(clip, options.trim);
  const auto windows = audio::segment(trimmed, options.window);
  std::vector<features::FeatureVector> out;
  out.reserve(windows.size());
  for (const auto& w : windows)
    out.push_back(features::extract_window_features(w, clip.sample_rate, options.schema, options.spectral));
  return out;
}

FeatureTable build_feature_table(const Manifest& manifest, const std::filesystem::path& audio_dir,
                                 const BuildOptions& options, BuildStats* stats) {
  options.trim.validate();
  options.window.validate();
  options.spectral.validate();
  features::validate_schema(options.schema, options.spectral.contrast_bands);

  const std::size_t n = manifest.rows.size();
  std::vector<ClipResult> results(n);
  parallel_for(n, resolve_threads(options.threads), [&](std::size_t i) {
    const ManifestRow& row = manifest.rows[i];
    ClipResult& res = results[i];
    try {
      const auto path = audio_dir / row.filename;
      if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, "missing audio file " + path.string());
      audio::AudioClip clip;
      try {
        clip = audio::read_wav(path);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MissingFile) throw;
        fail(ErrorCode::DecodeError, std::string(e.what()) + " [" + std::string(to_string(e.code())) + "]");
      }
      res.sample_rate = clip.sample_rate;
      clip.source_id = row.filename;
      try {
        auto vectors = clip_feature_vectors(clip, options);
        res.rows.reserve(vectors.size());
        for (auto& v : vectors) res.rows.push_back({row.filename, row.target, std::move(v.values)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyAfterTrim) throw Error(e.code(), row.filename + ": " + e.what());
        res.skipped = true;
      }
    } catch (const Error& e) {
      res.error = e;
    }
  });

  FeatureTable table;
  table.schema = options.schema;
  table.class_names = manifest.class_names();
  BuildStats local;
  local.clips = n;
  local.windows_per_clip.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ClipResult& res = results[i];
    if (res.error) throw *res.error;
    if (local.sample_rate == 0) local.sample_rate = res.sample_rate;
    if (res.sample_rate != local.sample_rate)
      fail(ErrorCode::SampleRateMismatch, manifest.rows[i].filename + ": sample rate " +
                                              std::to_string(res.sample_rate) + " Hz, dataset uses " +
                                              std::to_string(local.sample_rate) + " Hz");
    if (res.skipped) {
      ++local.clips_skipped;
      local.skipped_files.push_back(manifest.rows[i].filename);
      continue;
    }
    ++local.clips_used;
    local.windows_per_clip[i] = res.rows.size();
    for (auto& r : res.rows) table.rows.push_back(std::move(r));
  }
  local.rows = table.rows.size();
  if (stats) *stats = std::move(local);
  return table;
}

std::string_view to_string(SplitUnit unit) { return unit == SplitUnit::Clip ? "clip" : "window"; }

SplitUnit parse_split_unit(std::string_view name) {
  if (name == "window") return SplitUnit::Window;
  if (name == "clip") return SplitUnit::Clip;
  fail(ErrorCode::InvalidConfig, "split.unit must be 'window' or 'clip', got '" + std::string(name) + "'");
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac})
    if (!(f >= 0.0) || !std::isfinite(f)) fail(ErrorCode::InvalidConfig, "split fractions must be >= 0");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    fail(ErrorCode::InvalidConfig, "split fractions must sum to 1");
}

SplitIndices split_indices(const FeatureTable& table, const SplitSpec& spec) {
  spec.validate();
  if (table.empty()) fail(ErrorCode::DegenerateSplit, "cannot split an empty table");
  Rng rng(spec.seed);

  // Shuffle units (rows or clips), cut them, then expand to row indices.
  std::vector<std::vector<std::size_t>> units;
  if (spec.unit == SplitUnit::Window) {
    units.resize(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) units[i] = {i};
  } else {
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < table.size(); ++i) {
      auto [it, inserted] = slot.emplace(table.rows[i].clip_id, units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    }
  }
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n = units.size();
  const std::size_t c1 = std::min(cut(spec.train_frac, n), n);
  const std::size_t c2 = std::clamp(cut(spec.train_frac + spec.val_frac, n), c1, n);
  if (c1 == 0 || c2 == c1 || c2 == n)
    fail(ErrorCode::DegenerateSplit, "split of " + std::to_string(n) + " " +
                                         (spec.unit == SplitUnit::Clip ? "clips" : "rows") +
                                         " leaves a partition empty (" + std::to_string(c1) + "/" +
                                         std::to_string(c2 - c1) + "/" + std::to_string(n - c2) + ")");
  SplitIndices out;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < c1 ? out.train : (k < c2 ? out.validation : out.test);
    const auto& rows = units[order[k]];
    dst.insert(dst.end(), rows.begin(), rows.end());
  }
  return out;
}

FeatureTable select_rows(const FeatureTable& table, std::span<const std::size_t> indices) {
  FeatureTable out;
  out.schema = table.schema;
  out.class_names = table.class_names;
  out.rows.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= table.size()) fail(ErrorCode::SchemaMismatch, "row index " + std::to_string(i) + " out of range");
    out.rows.push_back(table.rows[i]);
  }
  return out;
}

SplitTables split(const FeatureTable& table, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(table, spec);
  return {select_rows(table, idx.train), select_rows(table, idx.validation), select_rows(table, idx.test)};
}

std::string format_table(const FeatureTable& table) {
  std::string out = "clip_id,label";
  for (const auto& name : table.schema.dimension_names()) out += "," + name;
  out += "\n";
  const std::size_t dims = table.schema.total_dims();
  for (const auto& row : table.rows) {
    if (row.values.size() != dims) fail(ErrorCode::SchemaMismatch, "row for " + row.clip_id + " has wrong width");
    out += csv_escape(row.clip_id);
    out += ',';
    out += std::to_string(row.label);
    for (double v : row.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_table(const FeatureTable& table, const std::filesystem::path& path) {
  const std::string text = format_table(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

FeatureTable parse_table(std::string_view csv, const features::FeatureSchema& schema,
                         const std::map<int, std::string>& class_names) {
  const auto records = parse_csv(csv);
  if (records.empty()) fail(ErrorCode::ParseError, "feature table has no header");
  const auto& header = records.front();
  const auto names = schema.dimension_names();
  if (header.size() != names.size() + 2)
    fail(ErrorCode::SchemaMismatch, "feature table has " + std::to_string(header.size() < 2 ? 0 : header.size() - 2) +
                                        " feature columns, schema " + schema.id() + " has " +
                                        std::to_string(names.size()));
  if (trim(header[0]) != "clip_id" || trim(header[1]) != "label")
    fail(ErrorCode::SchemaMismatch, "feature table header must start with clip_id,label");
  for (std::size_t i = 0; i < names.size(); ++i)
    if (trim(header[i + 2]) != names[i])
      fail(ErrorCode::SchemaMismatch, "column " + std::to_string(i + 3) + " is '" + header[i + 2] +
                                          "', schema expects '" + names[i] + "'");

  FeatureTable table;
  table.schema = schema;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string line = "feature table line " + std::to_string(r + 1);
    if (rec.size() != header.size()) fail(ErrorCode::ParseError, line + ": wrong number of fields");
    TableRow row;
    row.clip_id = rec[0];
    const auto label = parse_number<int>(rec[1]);
    if (!label || *label < 0) fail(ErrorCode::ParseError, line + ": bad label");
    row.label = *label;
    row.values.reserve(names.size());
    for (std::size_t i = 2; i < rec.size(); ++i) {
      const auto v = parse_number<double>(rec[i]);
      if (!v || !std::isfinite(*v)) fail(ErrorCode::ParseError, line + ": bad value '" + rec[i] + "'");
      row.values.push_back(*v);
    }
    table.rows.push_back(std::move(row));
  }
  table.class_names = class_names;
  for (const auto& row : table.rows)
    if (!table.class_names.count(row.label))
      table.class_names.emplace(row.label, "class_" + std::to_string(row.label));
  return table;
}

FeatureTable load_table(const std::filesystem::path& path, const features::FeatureSchema& schema,
                        const std::map<int, std::string>& class_names) {
  const std::string text = read_text(path);
  try {
    return parse_table(text, schema, class_names);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace ppaudio::dataset
