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


// Acceptance checks that need no dataset. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ppaudio/audio_io.hpp"
#include "ppaudio/config.hpp"
#include "ppaudio/features.hpp"
#include "ppaudio/forest.hpp"
#include "support/check.hpp"
#include "support/cli.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

namespace fs = std::filesystem;
using namespace ppaudio;
using nlohmann::json;

namespace {

// Collects the failed sub-checks of one criterion.
class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)) {}

  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) failures_.push_back(what);
  }

  bool report() const {
    const bool ok = failures_.empty();
    std::printf("%s %s (%zu checks", ok ? "PASS" : "FAIL", name_.c_str(), checks_);
    for (const auto& f : failures_) std::printf("; %s", f.c_str());
    std::printf(")\n");
    return ok;
  }

 private:
  std::string name_;
  std::size_t checks_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

oracle::Taper oracle_taper(features::Taper t) {
  switch (t) {
    case features::Taper::Hann: return oracle::Taper::Hann;
    case features::Taper::Hamming: return oracle::Taper::Hamming;
    case features::Taper::Rectangular: return oracle::Taper::Rectangular;
  }
  return oracle::Taper::Rectangular;
}

bool dsp_oracles() {
  using namespace features;
  Criterion c("3 dsp oracles");
  const int sr = 22050;

  double worst = 0;
  for (Taper t : {Taper::Hann, Taper::Hamming, Taper::Rectangular}) {
    SpectralConfig cfg;
    cfg.window_fn = t;
    for (std::size_t n : {std::size_t{2048}, std::size_t{1000}}) {
      cfg.frame_len = n;
      cfg.frame_hop = n / 2;
      for (int seed = 0; seed < 10; ++seed) {
        const auto x = synth::white_noise(n, 300 + seed);
        const double spectral = oracle::parseval_spectral(power_spectrum(x, sr, cfg).power, n);
        const double time = oracle::parseval_time(x, oracle_taper(t));
        worst = std::max(worst, std::abs(spectral - time) / time);
      }
    }
  }
  c.expect(worst <= 1e-6, "parseval relative error " + fmt(worst));

  {
    const SpectralConfig cfg;
    const double target = std::exp(-std::numbers::egamma);
    int outside = 0;
    double sum = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const auto ps = power_spectrum(synth::white_noise(cfg.frame_len, 5000 + trial), sr, cfg);
      const double fl = spectral_flatness(ps.power, cfg.power_floor);
      sum += fl;
      outside += std::abs(fl - 0.56) > 0.10;
    }
    c.expect(outside == 0, std::to_string(outside) + " of 200 flatness trials outside 0.56+-0.10");
    c.expect(std::abs(sum / 200 - target) <= 0.10, "mean flatness " + fmt(sum / 200));
  }

  {
    const auto x = synth::sine(100, 0.5, 8000);
    const double z = features::zcr(x);
    c.expect(std::abs(z - 0.025) <= 0.001, "sine zcr " + fmt(z));
    c.expect(std::abs(z - oracle::zcr(x)) <= 1e-12, "zcr differs from crossing count");
  }

  {
    const std::vector<double> flat(100, 1.0);
    std::vector<double> freqs(100);
    for (std::size_t k = 0; k < 100; ++k) freqs[k] = 10.0 * k;
    const std::size_t bin = oracle::rolloff_bin(flat, 0.85);
    c.expect(bin == 84, "oracle rolloff bin " + std::to_string(bin));
    c.expect(spectral_rolloff(flat, freqs, 0.85) == freqs[84], "rolloff of flat spectrum");
  }

  {
    const SpectralConfig cfg;
    const double sigma = std::sqrt(0.5 / 10.0);
    double worst_db = 0;
    for (int trial = 0; trial < 20; ++trial) {
      auto x = synth::sine(220, 0.5, sr, 1.0, 0.3 * trial);
      const auto n = synth::white_noise(x.size(), 700 + trial, sigma);
      double ps = 0, pn = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        ps += x[i] * x[i];
        pn += n[i] * n[i];
        x[i] += n[i];
      }
      worst_db = std::max(worst_db, std::abs(hnr(x, sr, cfg) - 10.0 * std::log10(ps / pn)));
    }
    c.expect(worst_db <= 2.0, "hnr error " + fmt(worst_db) + " dB");
  }

  {
    std::mt19937_64 gen(2024);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      const std::size_t w = 1 + gen() % 2000;
      const std::size_t h = 1 + gen() % 1000;
      const std::size_t n = gen() % 6000;
      mismatches += audio::window_count(n, w, h) != oracle::window_count(n, w, h);
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " window-count mismatches");
  }
  return c.report();
}

struct Data {
  std::vector<double> x;
  std::vector<int> y;
  std::size_t d = 0;
  std::size_t classes = 0;
  forest::TrainingView view() const { return {x, y, d, classes}; }
};

Data make_data(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed, int levels) {
  std::mt19937_64 gen(seed);
  Data out{{}, {}, d, classes};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) out.x.push_back(static_cast<double>(gen() % levels) * 0.25);
    out.y.push_back(static_cast<int>(gen() % classes));
  }
  return out;
}

bool forest_oracles() {
  using namespace forest;
  Criterion c("4 forest oracles");

  int tree_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + trial % 41;
    const auto data = make_data(n, 4, 2 + trial % 3, 40 + trial, 3 + trial % 8);
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.mtry = 4;
    p.max_depth = trial % 5 == 0 ? 2 : 0;
    const auto model = train_forest(data.view(), p);
    const auto& nodes = model.trees.at(0).nodes;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<oracle::CartNode> ref;
    oracle::cart_build(data.x, data.y, data.d, data.classes, all, 0, p.max_depth, ref);
    bool same = nodes.size() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) {
      same = nodes[i].feature == ref[i].feature;
      if (same && ref[i].feature >= 0) same = std::abs(nodes[i].threshold - ref[i].threshold) <= 1e-12;
      if (same && ref[i].feature < 0) same = nodes[i].counts == ref[i].counts;
    }
    tree_mismatch += !same;
  }
  c.expect(tree_mismatch == 0, std::to_string(tree_mismatch) + " of 100 trees differ from the CART oracle");

  {
    Data xor_data{{0, 0, 1, 1, 0, 1, 1, 0}, {0, 0, 1, 1}, 2, 2};
    ForestParams p;
    p.n_trees = 3;
    p.bootstrap = false;
    p.mtry = 2;
    p.max_depth = 2;
    const auto m = train_forest(xor_data.view(), p);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < 4; ++i)
      ok += predict(m, std::span<const double>(xor_data.x.data() + 2 * i, 2)).label == xor_data.y[i];
    c.expect(ok == 4, "xor training accuracy " + std::to_string(ok) + "/4");
  }

  {
    double worst = 0;
    for (int seed = 0; seed < 10; ++seed) {
      ForestParams p;
      p.n_trees = 20;
      p.seed = seed;
      const auto imp = gini_importance(train_forest(make_data(200, 6, 4, 90 + seed, 9).view(), p));
      worst = std::max(worst, std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0));
    }
    c.expect(worst <= 1e-9, "importance sum error " + fmt(worst));
  }

  {
    const auto data = make_data(500, 8, 5, 77, 40);
    ForestParams p;
    p.n_trees = 32;
    const std::string seq = serialize_model(train_forest(data.view(), p, 1));
    for (unsigned threads : {2u, 8u})
      c.expect(serialize_model(train_forest(data.view(), p, threads)) == seq,
               "model json differs with " + std::to_string(threads) + " threads");
  }
  return c.report();
}

bool privacy_guard(const fs::path& work) {
  using namespace features;
  Criterion c("5 privacy guard");
  for (std::string_view bad : kForbiddenFeatures) {
    const std::string name(bad);
    c.expect(testing::error_of([&] { FeatureSchema::from_names({"zcr", name}); }) == ErrorCode::ForbiddenFeature,
             "schema accepts " + name);
    c.expect(testing::message_of([&] { FeatureSchema::from_names({name}); }) == "ForbiddenFeature(" + name + ")",
             "message for " + name);
    c.expect(testing::error_of([&] { validate_schema(FeatureSchema(std::vector<SchemaEntry>{SchemaEntry{name, 1}})); }) == ErrorCode::ForbiddenFeature,
             "raw schema accepts " + name);
    c.expect(testing::error_of([&] { config_from_json(json{{"features", json::array({"hnr", name})}}); }) ==
                 ErrorCode::ForbiddenFeature,
             "config accepts " + name);
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
    c.expect(is_forbidden(upper) && is_forbidden(name + "_mean"), "variant of " + name + " not refused");
    c.expect(!is_allowed(name), name + " is allowlisted");
  }

  // The only way to request features is by family name, and every default
  // family is on the allowlist.
  const auto defaults = config_from_json(json::object()).schema();
  for (const auto& e : defaults.entries())
    c.expect(is_allowed(e.name) && !is_forbidden(e.name), "default family " + e.name);
  for (const auto& col : defaults.dimension_names())
    for (std::string_view bad : kForbiddenFeatures)
      c.expect(col.find(bad) == std::string::npos || col.find("spectral_") == 0, "column " + col);

  const auto r = cli::run("extract --audio-dir " + cli::quote(work.string()) + " --features zcr,mfcc -o " +
                              cli::quote((work / "never").string()),
                          work / "privacy.log");
  c.expect(r.exit_code == 1 && r.output.find("ForbiddenFeature(mfcc)") != std::string::npos,
           "cli accepted mfcc (exit " + std::to_string(r.exit_code) + ")");
  c.expect(!fs::exists(work / "never" / "features.csv"), "cli wrote a table with mfcc");
  return c.report();
}

bool determinism(const fs::path& work) {
  Criterion c("6 end-to-end determinism");
  const auto corpus = synth::write_corpus(work / "data", 5, 6, 2.0);
  const std::string args = "run --dataset-dir " + cli::quote(corpus.root.string()) + " --n-trees 25 --seed 9";
  const auto a = cli::run(args + " --threads 1 -o " + cli::quote((work / "a").string()), work / "a.log");
  const auto b = cli::run(args + " --threads 8 -o " + cli::quote((work / "b").string()), work / "b.log");
  c.expect(a.exit_code == 0 && b.exit_code == 0, "run failed: " + a.output + b.output);
  for (const std::string dir : {"", "clip_split/"}) {
    for (const char* f : {"model.json", "split.json", "eval_window.json", "eval_clip.json", "eval_validation.json",
                          "confusion_window.csv", "confusion_clip.csv", "importance.json"}) {
      const fs::path pa = work / "a" / (dir + f), pb = work / "b" / (dir + f);
      c.expect(fs::exists(pa) && cli::slurp(pa) == cli::slurp(pb), dir + f + " differs");
    }
  }
  for (const char* f : {"features.csv", "summary.json"})
    c.expect(fs::exists(work / "a" / f) && cli::slurp(work / "a" / f) == cli::slurp(work / "b" / f),
             std::string(f) + " differs");
  return c.report();
}

}  // namespace

int main() {
  const fs::path work = synth::temp_dir("acceptance");
  fs::remove_all(work);
  fs::create_directories(work);
  bool ok = true;
  for (const std::function<bool()>& criterion :
       std::vector<std::function<bool()>>{dsp_oracles, forest_oracles, [&] { return privacy_guard(work); },
                                          [&] { return determinism(work); }})
    ok = criterion() && ok;
  return ok ? 0 : 1;
}
