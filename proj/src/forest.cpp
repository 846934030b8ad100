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

#include "ppaudio/forest.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ppaudio/error.hpp"
#include "ppaudio/parallel.hpp"
#include "ppaudio/rng.hpp"

namespace ppaudio::forest {
namespace {

using nlohmann::json;

struct Candidate {
  double score = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& data, const ForestParams& params, std::uint64_t stream_seed)
      : data_(data),
        params_(params),
        rng_(stream_seed),
        mtry_(params.resolved_mtry(data.n_features)),
        feature_pool_(data.n_features),
        left_(data.n_classes),
        right_(data.n_classes) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
  }

  Tree grow(std::span<const std::size_t> sample) {
    sample_.assign(sample.begin(), sample.end());
    build(0, sample_.size(), 0);
    return Tree{std::move(nodes_)};
  }

 private:
  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto self = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    std::vector<std::uint32_t> counts(data_.n_classes, 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(data_.labels[sample_[i]])];
    const std::size_t n = end - begin;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; }) <= 1;
    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_capped || n < params_.min_samples_split) return make_leaf(self, std::move(counts));

    [[maybe_unused]] const double parent = gini(counts);
    const Candidate best = best_split(begin, end, counts);
    // Zero-gain splits are kept: with XOR-like data the first level gains
    // nothing and the second separates the classes.
    if (best.feature < 0) return make_leaf(self, std::move(counts));
    assert(best.score <= parent + kImpurityTieTolerance);

    const auto f = static_cast<std::size_t>(best.feature);
    auto mid_it = std::partition(sample_.begin() + static_cast<std::ptrdiff_t>(begin),
                                 sample_.begin() + static_cast<std::ptrdiff_t>(end),
                                 [&](std::size_t row) { return data_.at(row, f) <= best.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - sample_.begin());
    if (mid == begin || mid == end) return make_leaf(self, std::move(counts));

    nodes_[self].feature = best.feature;
    nodes_[self].threshold = best.threshold;
    const std::int32_t left = build(begin, mid, depth + 1);
    const std::int32_t right = build(mid, end, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  std::int32_t make_leaf(std::int32_t self, std::vector<std::uint32_t> counts) {
    nodes_[self].counts = std::move(counts);
    return self;
  }

  // mtry features without replacement, evaluated in ascending index order so
  // the first candidate within tolerance wins ties (lower feature, then lower
  // threshold).
  Candidate best_split(std::size_t begin, std::size_t end, const std::vector<std::uint32_t>& counts) {
    const std::size_t d = feature_pool_.size();
    for (std::size_t i = 0; i < mtry_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(d - i));
      std::swap(feature_pool_[i], feature_pool_[j]);
    }
    std::vector<std::size_t> chosen(feature_pool_.begin(), feature_pool_.begin() + static_cast<std::ptrdiff_t>(mtry_));
    std::sort(chosen.begin(), chosen.end());

    const std::size_t n = end - begin;
    const double n_total = static_cast<double>(n);
    std::uint64_t sumsq_all = 0;
    for (std::uint32_t c : counts) sumsq_all += static_cast<std::uint64_t>(c) * c;

    Candidate best;
    best.score = std::numeric_limits<double>::infinity();
    for (std::size_t f : chosen) {
      pairs_.clear();
      for (std::size_t i = begin; i < end; ++i) pairs_.emplace_back(data_.at(sample_[i], f), data_.labels[sample_[i]]);
      std::sort(pairs_.begin(), pairs_.end());
      if (pairs_.front().first == pairs_.back().first) continue;

      std::fill(left_.begin(), left_.end(), 0);
      std::copy(counts.begin(), counts.end(), right_.begin());
      std::uint64_t sumsq_left = 0;
      std::uint64_t sumsq_right = sumsq_all;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(pairs_[i].second);
        sumsq_left += 2ULL * left_[c] + 1;
        ++left_[c];
        sumsq_right -= 2ULL * right_[c] - 1;
        --right_[c];
        if (pairs_[i].first == pairs_[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < params_.min_samples_leaf || n_right < params_.min_samples_leaf) continue;
        const double nl = static_cast<double>(n_left);
        const double nr = static_cast<double>(n_right);
        const double score = ((nl - static_cast<double>(sumsq_left) / nl) +
                              (nr - static_cast<double>(sumsq_right) / nr)) / n_total;
        if (score < best.score - kImpurityTieTolerance) {
          const double a = pairs_[i].first;
          const double b = pairs_[i + 1].first;
          double threshold = a + (b - a) / 2.0;
          if (!(threshold < b)) threshold = a;
          best = {score, static_cast<int>(f), threshold};
        }
      }
    }
    return best;
  }

  const TrainingView& data_;
  const ForestParams& params_;
  Rng rng_;
  std::size_t mtry_;
  std::vector<std::size_t> feature_pool_;
  std::vector<std::uint32_t> left_;
  std::vector<std::uint32_t> right_;
  std::vector<std::pair<double, int>> pairs_;
  std::vector<std::size_t> sample_;
  std::vector<TreeNode> nodes_;
};

int argmax_lowest(std::span<const std::uint32_t> counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return static_cast<int>(best);
}

json node_to_json(const Tree& tree, std::size_t index) {
  const TreeNode& node = tree.nodes[index];
  if (node.is_leaf()) return json{{"counts", node.counts}};
  return json{{"feature", node.feature},
              {"threshold", node.threshold},
              {"left", node_to_json(tree, static_cast<std::size_t>(node.left))},
              {"right", node_to_json(tree, static_cast<std::size_t>(node.right))}};
}

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorCode::CorruptModel, "corrupt model: " + what); }

void node_from_json(const json& j, const RandomForestModel& model, Tree& tree, std::size_t depth) {
  if (!j.is_object()) corrupt("tree node is not an object");
  if (depth > 100000) corrupt("tree too deep");
  const auto self = tree.nodes.size();
  tree.nodes.emplace_back();
  if (j.contains("counts")) {
    auto counts = j.at("counts").get<std::vector<std::uint32_t>>();
    if (counts.size() != model.n_classes) corrupt("leaf counts do not cover every class");
    if (std::all_of(counts.begin(), counts.end(), [](std::uint32_t c) { return c == 0; }))
      corrupt("empty leaf");
    tree.nodes[self].counts = std::move(counts);
    return;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= model.n_features) corrupt("feature index out of range");
  const double threshold = j.at("threshold").get<double>();
  if (!std::isfinite(threshold)) corrupt("non-finite threshold");
  tree.nodes[self].feature = feature;
  tree.nodes[self].threshold = threshold;
  tree.nodes[self].left = static_cast<std::int32_t>(tree.nodes.size());
  node_from_json(j.at("left"), model, tree, depth + 1);
  tree.nodes[self].right = static_cast<std::int32_t>(tree.nodes.size());
  node_from_json(j.at("right"), model, tree, depth + 1);
}

}  // namespace

void ForestParams::validate(std::size_t n_features) const {
  if (n_trees < 1) fail(ErrorCode::InvalidConfig, "forest.n_trees must be at least 1");
  if (min_samples_leaf < 1) fail(ErrorCode::InvalidConfig, "forest.min_samples_leaf must be at least 1");
  if (min_samples_split < 2) fail(ErrorCode::InvalidConfig, "forest.min_samples_split must be at least 2");
  if (n_features > 0 && mtry > n_features)
    fail(ErrorCode::InvalidConfig, "forest.mtry (" + std::to_string(mtry) + ") exceeds feature count " +
                                       std::to_string(n_features));
}

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
  if (mtry > 0) return std::min(mtry, n_features);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

std::size_t Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf())
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                        : nodes[i].right);
  return i;
}

int Tree::vote(std::span<const double> x) const { return argmax_lowest(nodes[leaf_for(x)].counts); }

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double gini(std::span<const std::uint32_t> counts) {
  double n = 0.0;
  for (auto c : counts) n += c;
  if (!(n > 0.0)) return 0.0;
  double sumsq = 0.0;
  for (auto c : counts) sumsq += static_cast<double>(c) * c;
  return 1.0 - sumsq / (n * n);
}

Tree grow_tree(const TrainingView& data, std::span<const std::size_t> sample, const ForestParams& params,
               std::uint64_t stream_seed) {
  if (sample.empty()) fail(ErrorCode::EmptyTrainingSet, "cannot grow a tree on an empty sample");
  return TreeBuilder(data, params, stream_seed).grow(sample);
}

RandomForestModel train_forest(const TrainingView& data, const ForestParams& params, unsigned threads) {
  if (data.rows() == 0) fail(ErrorCode::EmptyTrainingSet, "training set is empty");
  if (data.n_features == 0) fail(ErrorCode::SchemaMismatch, "training set has no features");
  if (data.values.size() != data.rows() * data.n_features)
    fail(ErrorCode::SchemaMismatch, "training matrix shape mismatch");
  for (int label : data.labels)
    if (label < 0 || static_cast<std::size_t>(label) >= data.n_classes)
      fail(ErrorCode::BadLabel, "label " + std::to_string(label) + " outside [0, n_classes)");
  params.validate(data.n_features);

  RandomForestModel model;
  model.params = params;
  model.params.mtry = params.resolved_mtry(data.n_features);
  model.n_features = data.n_features;
  model.n_classes = data.n_classes;
  model.trees.resize(params.n_trees);
  for (std::size_t c = 0; c < data.n_classes; ++c) model.class_names.push_back("class_" + std::to_string(c));
  for (std::size_t f = 0; f < data.n_features; ++f) model.feature_names.push_back("f" + std::to_string(f));

  const std::size_t n = data.rows();
  parallel_for(params.n_trees, resolve_threads(threads), [&](std::size_t t) {
    const std::uint64_t stream = derive_seed(params.seed, t);
    std::vector<std::size_t> sample(n);
    if (params.bootstrap) {
      // The bootstrap draw comes from its own stream so that it does not
      // depend on how many draws the split search consumes.
      Rng draw(derive_seed(stream, 0xB007));
      for (auto& s : sample) s = static_cast<std::size_t>(draw.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    model.trees[t] = grow_tree(data, sample, model.params, stream);
  });
  return model;
}

RandomForestModel train_forest(const dataset::FeatureTable& train, const ForestParams& params, unsigned threads) {
  if (train.empty()) fail(ErrorCode::EmptyTrainingSet, "training table is empty");
  const std::size_t d = train.schema.total_dims();
  std::vector<double> values;
  values.reserve(train.size() * d);
  std::vector<int> labels;
  labels.reserve(train.size());
  int max_label = train.class_names.empty() ? 0 : train.class_names.rbegin()->first;
  for (const auto& row : train.rows) {
    if (row.values.size() != d) fail(ErrorCode::SchemaMismatch, "row width does not match schema");
    values.insert(values.end(), row.values.begin(), row.values.end());
    labels.push_back(row.label);
    max_label = std::max(max_label, row.label);
  }
  TrainingView view{values, labels, d, static_cast<std::size_t>(max_label) + 1};
  RandomForestModel model = train_forest(view, params, threads);
  model.schema_id = train.schema_id();
  model.feature_names = train.schema.dimension_names();
  model.class_names.resize(model.n_classes);
  for (std::size_t c = 0; c < model.n_classes; ++c) {
    auto it = train.class_names.find(static_cast<int>(c));
    model.class_names[c] = it != train.class_names.end() ? it->second : "class_" + std::to_string(c);
  }
  return model;
}

Prediction predict(const RandomForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    fail(ErrorCode::SchemaMismatch, "vector has " + std::to_string(x.size()) + " values, model expects " +
                                        std::to_string(model.n_features));
  Prediction p;
  p.votes.assign(model.n_classes, 0);
  for (const auto& tree : model.trees) ++p.votes[static_cast<std::size_t>(tree.vote(x))];
  p.label = argmax_lowest(p.votes);
  return p;
}

std::vector<double> gini_importance(const RandomForestModel& model) {
  const std::size_t d = model.n_features;
  std::vector<double> total(d, 0.0);
  for (const auto& tree : model.trees) {
    // Preorder: children follow parents, so a reverse sweep sees children first.
    std::vector<std::vector<std::uint32_t>> counts(tree.nodes.size());
    for (std::size_t i = tree.nodes.size(); i-- > 0;) {
      const TreeNode& node = tree.nodes[i];
      if (node.is_leaf()) {
        counts[i] = node.counts;
      } else {
        counts[i] = counts[static_cast<std::size_t>(node.left)];
        const auto& r = counts[static_cast<std::size_t>(node.right)];
        for (std::size_t c = 0; c < r.size(); ++c) counts[i][c] += r[c];
      }
    }
    if (tree.nodes.empty()) continue;
    auto size = [](const std::vector<std::uint32_t>& c) {
      return static_cast<double>(std::accumulate(c.begin(), c.end(), std::uint64_t{0}));
    };
    const double n_root = size(counts[0]);
    std::vector<double> per_tree(d, 0.0);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& node = tree.nodes[i];
      if (node.is_leaf()) continue;
      const auto& l = counts[static_cast<std::size_t>(node.left)];
      const auto& r = counts[static_cast<std::size_t>(node.right)];
      const double n = size(counts[i]);
      const double children = (size(l) * gini(l) + size(r) * gini(r)) / n;
      per_tree[static_cast<std::size_t>(node.feature)] += (n / n_root) * (gini(counts[i]) - children);
    }
    for (std::size_t f = 0; f < d; ++f) total[f] += per_tree[f];
  }
  std::vector<double> out(d, 0.0);
  if (d == 0) return out;
  for (std::size_t f = 0; f < d; ++f) out[f] = model.trees.empty() ? 0.0 : std::max(0.0, total[f] / model.trees.size());
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  if (!(sum > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(d));
    return out;
  }
  for (double& v : out) v /= sum;
  return out;
}

json to_json(const RandomForestModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) trees.push_back(node_to_json(tree, 0));
  const ForestParams& p = model.params;
  return json{{"format_version", kModelFormatVersion},
              {"kind", "ppaudio.random_forest"},
              {"schema_id", model.schema_id},
              {"n_features", model.n_features},
              {"n_classes", model.n_classes},
              {"class_names", model.class_names},
              {"feature_names", model.feature_names},
              {"params",
               {{"n_trees", p.n_trees},
                {"max_depth", p.max_depth == 0 ? json(nullptr) : json(p.max_depth)},
                {"min_samples_leaf", p.min_samples_leaf},
                {"min_samples_split", p.min_samples_split},
                {"mtry", p.mtry},
                {"bootstrap", p.bootstrap},
                {"seed", p.seed}}},
              {"metadata", model.metadata},
              {"trees", std::move(trees)}};
}

RandomForestModel from_json(const json& doc) {
  if (!doc.is_object()) corrupt("document is not an object");
  if (!doc.contains("format_version")) corrupt("missing format_version");
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      fail(ErrorCode::VersionMismatch, "model format_version " + std::to_string(version) + " is not supported (expected " +
                                           std::to_string(kModelFormatVersion) + ")");
    RandomForestModel model;
    model.schema_id = doc.at("schema_id").get<std::string>();
    model.n_features = doc.at("n_features").get<std::size_t>();
    model.n_classes = doc.at("n_classes").get<std::size_t>();
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    model.feature_names = doc.value("feature_names", std::vector<std::string>{});
    if (model.n_classes == 0 || model.class_names.size() != model.n_classes) corrupt("class table inconsistent");
    if (!model.feature_names.empty() && model.feature_names.size() != model.n_features)
      corrupt("feature names inconsistent");
    const json& p = doc.at("params");
    model.params.n_trees = p.at("n_trees").get<std::size_t>();
    model.params.max_depth = p.at("max_depth").is_null() ? 0 : p.at("max_depth").get<std::size_t>();
    model.params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
    model.params.min_samples_split = p.at("min_samples_split").get<std::size_t>();
    model.params.mtry = p.at("mtry").get<std::size_t>();
    model.params.bootstrap = p.at("bootstrap").get<bool>();
    model.params.seed = p.at("seed").get<std::uint64_t>();
    model.metadata = doc.value("metadata", json::object());
    const json& trees = doc.at("trees");
    if (!trees.is_array() || trees.size() != model.params.n_trees) corrupt("tree count does not match params");
    for (const auto& t : trees) {
      Tree tree;
      node_from_json(t, model, tree, 0);
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
}

std::string serialize_model(const RandomForestModel& model) { return to_json(model).dump() + "\n"; }

RandomForestModel parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  return from_json(doc);
}

void save_model(const RandomForestModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << serialize_model(model);
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

RandomForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace ppaudio::forest
