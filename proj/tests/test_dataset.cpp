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

#include <algorithm>
#include <random>
#include <set>

#include "ppaudio/dataset.hpp"
#include "support/check.hpp"
#include "support/synth.hpp"

using namespace ppaudio;
using namespace ppaudio::dataset;
using testing::error_of;

namespace {

FeatureTable random_table(std::size_t rows, std::size_t windows_per_clip, std::uint64_t seed) {
  FeatureTable t;
  t.schema = features::FeatureSchema::default_schema();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (std::size_t i = 0; i < rows; ++i) {
    TableRow r;
    r.clip_id = "clip" + std::to_string(i / windows_per_clip) + ".wav";
    r.label = static_cast<int>((i / windows_per_clip) % 5);
    for (std::size_t d = 0; d < 27; ++d) r.values.push_back(u(gen) * std::pow(10.0, static_cast<int>(gen() % 20) - 10));
    t.rows.push_back(std::move(r));
  }
  for (int c = 0; c < 5; ++c) t.class_names[c] = "c" + std::to_string(c);
  return t;
}

void check_partition(const SplitIndices& s, std::size_t n) {
  std::vector<std::size_t> all;
  all.insert(all.end(), s.train.begin(), s.train.end());
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == n);
  for (std::size_t i = 0; i < n; ++i) REQUIRE(all[i] == i);
}

}  // namespace

TEST_CASE("manifest parsing") {
  const auto m = load_manifest(
      "filename,fold,target,category,esc10\n1-100-A-0.wav,1,0,dog,True\n1-101-A-1.wav,2,1,\"rooster, loud\",False\n");
  REQUIRE(m.rows.size() == 2);
  CHECK(m.rows[1].category == "rooster, loud");
  CHECK(m.rows[1].fold == 2);
  CHECK(m.class_names().at(1) == "rooster, loud");

  CHECK(error_of([] { load_manifest("filename,fold,category\na.wav,1,dog\n"); }) == ErrorCode::MissingColumn);
  CHECK(error_of([] { load_manifest("filename,fold,target,category\na.wav,1,50,dog\n"); }) == ErrorCode::BadLabel);
  CHECK(error_of([] { load_manifest("filename,fold,target,category\na.wav,1,-1,dog\n"); }) == ErrorCode::BadLabel);
  CHECK(error_of([] { load_manifest("filename,fold,target,category\na.wav,1,0,dog\nb.wav,1,0,cat\n"); }) ==
        ErrorCode::BadLabel);
  CHECK(error_of([] { load_manifest("filename,fold,target,category\na.wav,1,0,dog\na.wav,2,0,dog\n"); }) ==
        ErrorCode::DuplicateFilename);
  CHECK(error_of([] { load_manifest("filename,fold,target,category\na.wav,1,x,dog\n"); }) == ErrorCode::BadLabel);
  CHECK(error_of([] { load_manifest("filename,fold,target,category\na.wav,one,1,dog\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("csv helpers") {
  const auto rows = parse_csv("a,\"b,c\",\"d\"\"e\"\r\n1,2,3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][1] == "b,c");
  CHECK(rows[0][2] == "d\"e");
  CHECK(csv_escape("x,y") == "\"x,y\"");
  CHECK(csv_escape("plain") == "plain");
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("feature table build") {
  const auto dir = synth::temp_dir("dataset_build");
  const auto corpus = synth::write_corpus(dir, 3, 2, 5.0, 22050, true);
  const auto manifest = read_manifest(corpus.manifest);
  BuildOptions opts;
  BuildStats stats;
  const auto table = build_feature_table(manifest, corpus.audio_dir, opts, &stats);
  CHECK(stats.clips == 7);
  CHECK(stats.clips_skipped == 1);
  CHECK(stats.clips_used == 6);
  CHECK(stats.sample_rate == 22050);
  REQUIRE(stats.skipped_files.size() == 1);
  CHECK(stats.skipped_files[0] == "1-9999-A-0.wav");

  // Independent row count: run trim and segment clip by clip.
  std::size_t expected = 0;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& row : manifest.rows) {
    const auto clip = audio::read_wav(corpus.audio_dir / row.filename);
    std::size_t windows = 0;
    try {
      windows = audio::segment(audio::trim_silence(clip, opts.trim), opts.window).size();
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::EmptyAfterTrim);
    }
    expected += windows;
    for (std::size_t w = 0; w < windows; ++w) order.emplace_back(row.filename, row.target);
  }
  REQUIRE(table.size() == expected);
  CHECK(stats.rows == expected);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(table.rows[i].clip_id == order[i].first);
    CHECK(table.rows[i].label == order[i].second);
    CHECK(table.rows[i].values.size() == 27);
  }
  // A 5 s tone clip loses nothing to trimming.
  CHECK(stats.windows_per_clip[0] == 12);

  BuildOptions par = opts;
  par.threads = 4;
  const auto again = build_feature_table(manifest, corpus.audio_dir, par);
  CHECK(format_table(again) == format_table(table));
}

TEST_CASE("feature table build errors name the file") {
  const auto dir = synth::temp_dir("dataset_errors");
  const auto corpus = synth::write_corpus(dir, 2, 1, 1.0);
  auto manifest = read_manifest(corpus.manifest);
  manifest.rows.push_back({"missing.wav", 1, 0, "class0"});
  auto msg = testing::message_of([&] { build_feature_table(manifest, corpus.audio_dir, BuildOptions{}); });
  CHECK(msg.find("missing.wav") != std::string::npos);
  CHECK(error_of([&] { build_feature_table(manifest, corpus.audio_dir, BuildOptions{}); }) == ErrorCode::MissingFile);

  manifest.rows.back() = {"other_rate.wav", 1, 0, "class0"};
  audio::write_file(corpus.audio_dir / "other_rate.wav", audio::encode_wav_pcm16(synth::sine(300, 1, 16000), 16000));
  CHECK(error_of([&] { build_feature_table(manifest, corpus.audio_dir, BuildOptions{}); }) ==
        ErrorCode::SampleRateMismatch);

  manifest.rows.back() = {"garbage.wav", 1, 0, "class0"};
  const std::vector<std::uint8_t> junk = {'n', 'o', 'p', 'e'};
  audio::write_file(corpus.audio_dir / "garbage.wav", junk);
  msg = testing::message_of([&] { build_feature_table(manifest, corpus.audio_dir, BuildOptions{}); });
  CHECK(msg.find("garbage.wav") != std::string::npos);
  CHECK(error_of([&] { build_feature_table(manifest, corpus.audio_dir, BuildOptions{}); }) == ErrorCode::DecodeError);
}

TEST_CASE("window split sizes follow floor arithmetic") {
  const auto t = random_table(100, 1, 1);
  const auto s = split_indices(t, SplitSpec{});
  CHECK(s.train.size() == 70);
  CHECK(s.validation.size() == 15);
  CHECK(s.test.size() == 15);
  check_partition(s, 100);

  const auto big = random_table(24000, 12, 2);
  const auto b = split_indices(big, SplitSpec{});
  CHECK(b.train.size() == 16800);
  CHECK(b.validation.size() == 3600);
  CHECK(b.test.size() == 3600);

  // Oracle: the cut points floor(0.70 N) and floor(0.85 N) for many N.
  for (std::size_t n = 7; n < 400; ++n) {
    const auto tn = random_table(n, 1, n);
    const auto sn = split_indices(tn, SplitSpec{});
    const auto c1 = static_cast<std::size_t>(std::floor(0.70L * n + 1e-9L));
    const auto c2 = static_cast<std::size_t>(std::floor(0.85L * n + 1e-9L));
    REQUIRE(sn.train.size() == c1);
    REQUIRE(sn.validation.size() == c2 - c1);
  }
}

TEST_CASE("split determinism and degenerate cases") {
  const auto t = random_table(1000, 1, 3);
  SplitSpec a;
  const auto s1 = split_indices(t, a);
  CHECK(split_indices(t, a).train == s1.train);
  a.seed = 43;
  CHECK(split_indices(t, a).train != s1.train);

  const auto small = random_table(10, 1, 4);
  SplitSpec deg;
  deg.train_frac = 1.0;
  deg.val_frac = 0.0;
  deg.test_frac = 0.0;
  CHECK(error_of([&] { split_indices(small, deg); }) == ErrorCode::DegenerateSplit);
  SplitSpec bad;
  bad.train_frac = 0.8;
  CHECK(error_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  CHECK(error_of([&] { split_indices(FeatureTable{}, SplitSpec{}); }) == ErrorCode::DegenerateSplit);
}

TEST_CASE("clip split keeps clips whole") {
  const auto t = random_table(1200, 12, 5);
  SplitSpec spec;
  spec.unit = SplitUnit::Clip;
  const auto s = split_indices(t, spec);
  check_partition(s, 1200);
  std::map<std::string, int> where;
  auto mark = [&](const std::vector<std::size_t>& part, int id) {
    for (std::size_t i : part) {
      auto [it, inserted] = where.emplace(t.rows[i].clip_id, id);
      REQUIRE(it->second == id);
    }
  };
  mark(s.train, 0);
  mark(s.validation, 1);
  mark(s.test, 2);
  CHECK(s.train.size() == 70 * 12);
  CHECK(s.validation.size() == 15 * 12);

  const auto parts = split(t, spec);
  CHECK(parts.train.size() == s.train.size());
  CHECK(parts.test.rows[0].clip_id == t.rows[s.test[0]].clip_id);
  CHECK(parse_split_unit("clip") == SplitUnit::Clip);
  CHECK(error_of([] { parse_split_unit("fold"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("table csv round trip") {
  const auto t = random_table(50, 3, 6);
  const auto dir = synth::temp_dir("table_io");
  save_table(t, dir / "t.csv");
  const auto back = load_table(dir / "t.csv", t.schema, t.class_names);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.rows[i].clip_id == t.rows[i].clip_id);
    CHECK(back.rows[i].label == t.rows[i].label);
    for (std::size_t d = 0; d < 27; ++d)
      CHECK(std::abs(back.rows[i].values[d] - t.rows[i].values[d]) <= 1e-9 * std::abs(t.rows[i].values[d]));
  }
  CHECK(back.class_names == t.class_names);

  const auto text = format_table(t);
  CHECK(text.substr(0, text.find('\n')).find("clip_id,label,zcr,hnr,peak,rms,energy,spectral_contrast_b0_mean") == 0);

  // Default class names when none are supplied.
  CHECK(parse_table(text, t.schema).class_names.at(2) == "class_2");

  // Drop the last feature column.
  std::string header = text.substr(0, text.find('\n'));
  header = header.substr(0, header.rfind(','));
  CHECK(error_of([&] { parse_table(header + "\n", t.schema); }) == ErrorCode::SchemaMismatch);

  const auto empty = parse_table(text.substr(0, text.find('\n') + 1), t.schema);
  CHECK(empty.empty());
  CHECK(empty.schema == t.schema);

  std::string bad = text;
  bad.replace(bad.find(',', bad.find('\n') + 1) + 1, 1, "x");
  CHECK(error_of([&] { parse_table(bad, t.schema); }) == ErrorCode::ParseError);
}
