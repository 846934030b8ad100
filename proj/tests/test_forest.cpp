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
#include <functional>
#include <numeric>
#include <random>

#include "ppaudio/forest.hpp"
#include "support/check.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace ppaudio;
using namespace ppaudio::forest;
using testing::error_of;

namespace {

struct Data {
  std::vector<double> x;
  std::vector<int> y;
  std::size_t d = 0;
  std::size_t classes = 0;

  TrainingView view() const { return {x, y, d, classes}; }
  std::size_t rows() const { return y.size(); }
};

Data make_data(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed, int levels = 7) {
  std::mt19937_64 gen(seed);
  Data out;
  out.d = d;
  out.classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) out.x.push_back(static_cast<double>(gen() % levels) * 0.5);
    out.y.push_back(static_cast<int>(gen() % classes));
  }
  return out;
}

double training_accuracy(const RandomForestModel& m, const Data& data) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.rows(); ++i)
    ok += predict(m, std::span<const double>(data.x.data() + i * data.d, data.d)).label == data.y[i];
  return static_cast<double>(ok) / data.rows();
}

RandomForestModel leaf_forest(std::vector<std::vector<std::uint32_t>> leaves, std::size_t classes) {
  RandomForestModel m;
  m.n_features = 1;
  m.n_classes = classes;
  for (std::size_t c = 0; c < classes; ++c) m.class_names.push_back("c" + std::to_string(c));
  m.feature_names = {"x"};
  for (auto& counts : leaves) {
    Tree t;
    TreeNode leaf;
    leaf.counts = counts;
    t.nodes.push_back(leaf);
    m.trees.push_back(t);
  }
  return m;
}

}  // namespace

TEST_CASE("single deterministic tree equals the exhaustive CART oracle") {
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + trial % 46;
    const auto data = make_data(n, 4, 2 + trial % 3, 1000 + trial, 3 + trial % 9);
    p.mtry = 4;
    p.max_depth = trial % 4 == 0 ? 3 : 0;
    const auto model = train_forest(data.view(), p);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<oracle::CartNode> ref;
    oracle::cart_build(data.x, data.y, data.d, data.classes, all, 0, p.max_depth, ref);
    const auto& nodes = model.trees.at(0).nodes;
    REQUIRE(nodes.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      INFO("trial " << trial << " node " << i);
      REQUIRE(nodes[i].feature == ref[i].feature);
      if (ref[i].feature >= 0) {
        REQUIRE(nodes[i].threshold == doctest::Approx(ref[i].threshold).epsilon(1e-12));
      } else {
        REQUIRE(nodes[i].counts == ref[i].counts);
      }
    }
  }
}

TEST_CASE("xor needs and gets two levels") {
  Data xor_data;
  xor_data.d = 2;
  xor_data.classes = 2;
  xor_data.x = {0, 0, 1, 1, 0, 1, 1, 0};
  xor_data.y = {0, 0, 1, 1};
  ForestParams p;
  p.n_trees = 5;
  p.bootstrap = false;
  p.mtry = 2;
  p.max_depth = 2;
  const auto m = train_forest(xor_data.view(), p);
  CHECK(training_accuracy(m, xor_data) == 1.0);
  CHECK(m.trees[0].depth() == 2);
  p.max_depth = 1;
  CHECK(training_accuracy(train_forest(xor_data.view(), p), xor_data) < 1.0);
}

TEST_CASE("memorization without bootstrap") {
  auto data = make_data(300, 5, 4, 77, 1000);
  ForestParams p;
  p.n_trees = 10;
  p.bootstrap = false;
  CHECK(training_accuracy(train_forest(data.view(), p), data) == 1.0);
}

TEST_CASE("single class data gives pure leaves and uniform importance") {
  Data data = make_data(40, 3, 1, 5);
  data.classes = 3;
  std::fill(data.y.begin(), data.y.end(), 2);
  const auto m = train_forest(data.view(), ForestParams{});
  for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
  const double probe[3] = {9, 9, 9};
  CHECK(predict(m, probe).label == 2);
  for (double v : gini_importance(m)) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("votes and tie-break") {
  const auto m = leaf_forest({{0, 0, 5}, {0, 0, 1}, {1, 2, 3}}, 3);
  const double x[1] = {0};
  const auto p = predict(m, x);
  CHECK(p.votes == std::vector<std::uint32_t>{0, 0, 3});
  CHECK(p.label == 2);

  const auto tie = leaf_forest({{0, 1, 0, 0, 0}, {0, 0, 0, 0, 1}}, 5);
  CHECK(predict(tie, x).label == 1);
  // Tie inside a leaf goes to the lower class as well.
  const auto leaf_tie = leaf_forest({{0, 2, 0, 2}}, 4);
  CHECK(predict(leaf_tie, x).label == 1);

  const double wide[2] = {0, 0};
  CHECK(error_of([&] { predict(m, wide); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("importance concentrates on the informative feature") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g;
  Data data;
  data.d = 4;
  data.classes = 2;
  for (int i = 0; i < 200; ++i) {
    const double f0 = g(gen);
    data.x.push_back(f0);
    for (int k = 0; k < 3; ++k) data.x.push_back(g(gen));
    data.y.push_back(f0 > 0 ? 1 : 0);
  }
  const auto m = train_forest(data.view(), ForestParams{});
  const auto imp = gini_importance(m);
  CHECK(imp[0] > 0.8);
  CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : imp) CHECK(v >= 0.0);
}

TEST_CASE("importances sum to one") {
  for (int seed = 0; seed < 10; ++seed) {
    const auto data = make_data(120, 6, 3, 500 + seed);
    ForestParams p;
    p.n_trees = 15;
    p.seed = seed;
    const auto imp = gini_importance(train_forest(data.view(), p));
    double s = 0;
    for (double v : imp) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("parallel training is byte identical") {
  const auto data = make_data(400, 8, 5, 31, 50);
  ForestParams p;
  p.n_trees = 24;
  const auto seq = serialize_model(train_forest(data.view(), p, 1));
  CHECK(serialize_model(train_forest(data.view(), p, 4)) == seq);
  CHECK(serialize_model(train_forest(data.view(), p, 13)) == seq);
  p.seed = 7;
  CHECK(serialize_model(train_forest(data.view(), p, 1)) != seq);
}

TEST_CASE("row order does not matter without bootstrap") {
  const auto data = make_data(150, 5, 3, 8, 20);
  Data permuted = data;
  std::vector<std::size_t> perm(data.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  for (std::size_t i = 0; i < perm.size(); ++i) {
    permuted.y[i] = data.y[perm[i]];
    for (std::size_t f = 0; f < data.d; ++f) permuted.x[i * data.d + f] = data.x[perm[i] * data.d + f];
  }
  ForestParams p;
  p.n_trees = 8;
  p.bootstrap = false;
  CHECK(serialize_model(train_forest(data.view(), p)) == serialize_model(train_forest(permuted.view(), p)));
}

TEST_CASE("hyperparameters are honoured") {
  const auto data = make_data(300, 6, 4, 12, 100);
  ForestParams p;
  p.n_trees = 6;
  p.max_depth = 3;
  for (const auto& t : train_forest(data.view(), p).trees) CHECK(t.depth() <= 3);
  p.max_depth = 0;
  p.min_samples_leaf = 10;
  for (const auto& t : train_forest(data.view(), p).trees)
    for (const auto& node : t.nodes)
      if (node.is_leaf()) CHECK(std::accumulate(node.counts.begin(), node.counts.end(), 0u) >= 10);

  ForestParams bad;
  bad.mtry = 7;
  CHECK(error_of([&] { bad.validate(6); }) == ErrorCode::InvalidConfig);
  bad = ForestParams{};
  bad.n_trees = 0;
  CHECK(error_of([&] { bad.validate(6); }) == ErrorCode::InvalidConfig);
  CHECK(ForestParams{}.resolved_mtry(27) == 5);

  Data empty;
  empty.d = 3;
  empty.classes = 2;
  CHECK(error_of([&] { train_forest(empty.view(), ForestParams{}); }) == ErrorCode::EmptyTrainingSet);
}

TEST_CASE("model json round trip") {
  const auto data = make_data(200, 5, 4, 21, 100);
  ForestParams p;
  p.n_trees = 12;
  auto m = train_forest(data.view(), p);
  m.schema_id = "test-schema";
  m.metadata["note"] = "x";
  const auto text = serialize_model(m);
  const auto back = parse_model(text);
  CHECK(serialize_model(back) == text);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1, 5);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(gen);
    const auto a = predict(m, x);
    const auto b = predict(back, x);
    CHECK(a.label == b.label);
    CHECK(a.votes == b.votes);
  }
  const auto dir = synth::temp_dir("model_io");
  save_model(m, dir / "m.json");
  CHECK(serialize_model(load_model(dir / "m.json")) == text);

  CHECK(error_of([&] { parse_model(text.substr(0, text.size() / 2)); }) == ErrorCode::CorruptModel);
  auto doc = nlohmann::json::parse(text);
  doc["format_version"] = 99;
  CHECK(error_of([&] { parse_model(doc.dump()); }) == ErrorCode::VersionMismatch);
  doc = nlohmann::json::parse(text);
  doc["trees"][0]["feature"] = 40;
  CHECK(error_of([&] { parse_model(doc.dump()); }) == ErrorCode::CorruptModel);
  CHECK(error_of([&] { load_model(dir / "absent.json"); }).has_value());
}

TEST_CASE("gini") {
  CHECK(gini(std::vector<std::uint32_t>{5, 5}) == doctest::Approx(0.5));
  CHECK(gini(std::vector<std::uint32_t>{7, 0}) == 0.0);
  CHECK(gini(std::vector<std::uint32_t>{1, 1, 1}) == doctest::Approx(2.0 / 3));
}
