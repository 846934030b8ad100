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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppaudio/dataset.hpp"

namespace ppaudio::forest {

inline constexpr int kModelFormatVersion = 1;

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unbounded
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::size_t mtry = 0;  // 0 = floor(sqrt(n_features))
  bool bootstrap = true;
  std::uint64_t seed = 42;

  void validate(std::size_t n_features) const;
  std::size_t resolved_mtry(std::size_t n_features) const;
};

/// Internal nodes carry (feature, threshold, children); leaves carry the class
/// counts of the tree's own training sample that reached them.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint32_t> counts;

  bool is_leaf() const { return feature < 0; }
};

/// Preorder node array, root at index 0.
struct Tree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_for(std::span<const double> x) const;
  int vote(std::span<const double> x) const;
  std::size_t depth() const;
};

struct RandomForestModel {
  std::vector<Tree> trees;
  ForestParams params;
  std::string schema_id;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<std::string> class_names;    // indexed by label
  std::vector<std::string> feature_names;  // indexed by feature
  nlohmann::json metadata = nlohmann::json::object();
};

/// Row-major training matrix.
struct TrainingView {
  std::span<const double> values;
  std::span<const int> labels;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;

  std::size_t rows() const { return labels.size(); }
  double at(std::size_t row, std::size_t feature) const { return values[row * n_features + feature]; }
};

/// Weighted Gini of a split is considered a tie with the incumbent when the
/// two differ by less than this.
inline constexpr double kImpurityTieTolerance = 1e-12;

/// Grows one tree on `sample` (row indices, repeats allowed) with the given RNG
/// stream seed. Exposed for the oracle tests.
Tree grow_tree(const TrainingView& data, std::span<const std::size_t> sample, const ForestParams& params,
               std::uint64_t stream_seed);

/// Each tree is grown from its own stream derive_seed(params.seed, t), so the
/// model is identical for any `threads`.
RandomForestModel train_forest(const TrainingView& data, const ForestParams& params, unsigned threads = 1);
RandomForestModel train_forest(const dataset::FeatureTable& train, const ForestParams& params,
                               unsigned threads = 1);

struct Prediction {
  int label = 0;
  std::vector<std::uint32_t> votes;
};

/// Throws SchemaMismatch when x has the wrong width.
Prediction predict(const RandomForestModel& model, std::span<const double> x);

double gini(std::span<const std::uint32_t> counts);

/// Mean decrease in Gini impurity per feature, averaged over trees and
/// normalized to sum to one (uniform when the forest never splits).
std::vector<double> gini_importance(const RandomForestModel& model);

nlohmann::json to_json(const RandomForestModel& model);
RandomForestModel from_json(const nlohmann::json& doc);

std::string serialize_model(const RandomForestModel& model);
/// Throws CorruptModel or VersionMismatch.
RandomForestModel parse_model(std::string_view text);

void save_model(const RandomForestModel& model, const std::filesystem::path& path);
RandomForestModel load_model(const std::filesystem::path& path);

}  // namespace ppaudio::forest
