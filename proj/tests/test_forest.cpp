#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "hdgkit/error.hpp"
#include "hdgkit/forest.hpp"
#include "hdgkit/model_io.hpp"

using namespace hdg;

namespace {

struct Data {
  FeatureMatrix x;
  std::vector<int> y;
};

// Two Gaussian blobs separated along feature 0; other features are noise.
Data separable(std::size_t n, std::size_t f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Data d{FeatureMatrix(n, f), std::vector<int>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    d.y[r] = static_cast<int>(r % 2);
    d.x.at(r, 0) = (d.y[r] == 0 ? -5.0 : 5.0) + noise(rng);
    for (std::size_t c = 1; c < f; ++c) d.x.at(r, c) = noise(rng);
  }
  return d;
}

DecisionTree stump(double threshold) {
  std::vector<TreeNode> nodes(3);
  nodes[0] = {0, threshold, 1, 2, 0.25, {}};
  nodes[1] = {-1, 0.0, -1, -1, 0.0, {3, 1}};
  nodes[2] = {-1, 0.0, -1, -1, 0.0, {0, 4}};
  return DecisionTree(std::move(nodes), 2);
}

}  // namespace

TEST_CASE("xor layout is learned exactly") {
  // Each corner appears five times so that bootstrap draws cover all four
  // corners; with one copy per corner an out-of-bag corner is voted against.
  std::vector<double> values;
  std::vector<int> y;
  const double corners[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int copy = 0; copy < 5; ++copy)
    for (int k = 0; k < 4; ++k) {
      values.insert(values.end(), {corners[k][0], corners[k][1]});
      y.push_back(k == 1 || k == 2 ? 1 : 0);
    }
  const FeatureMatrix x(20, 2, values);
  const auto forest = train_forest(x, y, {8, 17, 0, 1});
  CHECK(forest.trees().size() == 8);
  for (std::size_t r = 0; r < 4; ++r) CHECK(forest.predict_label(x.row(r)) == y[r]);
}

TEST_CASE("a tree that saw every xor corner fits all of them") {
  // The first split on xor has zero Gini gain and must still be taken.
  const FeatureMatrix x(4, 2, {0, 0, 0, 1, 1, 0, 1, 1});
  const std::vector<int> y{0, 1, 1, 0};
  int complete = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto forest = train_forest(x, y, {1, seed, 0, 1});
    const auto& tree = forest.trees()[0];
    std::uint32_t seen[4] = {0, 0, 0, 0};
    for (std::size_t r = 0; r < 4; ++r) seen[r] = tree.leaf_for(x.row(r)).class_counts[static_cast<std::size_t>(y[r])];
    if (seen[0] && seen[1] && seen[2] && seen[3]) {
      ++complete;
      for (std::size_t r = 0; r < 4; ++r) CHECK(forest.predict_label(x.row(r)) == y[r]);
    }
  }
  CHECK(complete > 0);
}

TEST_CASE("training is deterministic and independent of job count") {
  const auto d = separable(40, 6, 1);
  const auto a = train_forest(d.x, d.y, {1, 42, 0, 1});
  const auto b = train_forest(d.x, d.y, {1, 42, 0, 1});
  CHECK(a == b);
  const auto serial = train_forest(d.x, d.y, {16, 7, 0, 1});
  const auto threaded = train_forest(d.x, d.y, {16, 7, 0, 4});
  CHECK(serial == threaded);
  CHECK_FALSE(train_forest(d.x, d.y, {16, 8, 0, 1}) == serial);
}

TEST_CASE("training preconditions") {
  FeatureMatrix x(3, 1, {1, 2, 3});
  CHECK_THROWS_AS(train_forest(x, std::vector<int>{1, 1, 1}, {4, 0, 0, 1}), ValidationError);
  CHECK_THROWS_AS(train_forest(x, std::vector<int>{0, 1}, {4, 0, 0, 1}), ValidationError);
  FeatureMatrix bad(2, 1, {1, NAN});
  CHECK_THROWS_AS(train_forest(bad, std::vector<int>{0, 1}, {4, 0, 0, 1}), ValidationError);
  CHECK_THROWS_AS(train_forest(x, std::vector<int>{0, 1, 0}, {0, 0, 0, 1}), ValidationError);
}

TEST_CASE("tree structure invariants") {
  const auto d = separable(60, 5, 2);
  const auto forest = train_forest(d.x, d.y, {5, 3, 0, 1});
  for (const auto& tree : forest.trees()) {
    std::uint32_t leaf_rows = 0;
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) {
        for (auto c : node.class_counts) leaf_rows += c;
      } else {
        CHECK(node.left > 0);
        CHECK(node.right > 0);
        CHECK(node.impurity_decrease >= 0.0);
      }
    }
    CHECK(leaf_rows == 60);  // bootstrap draws as many rows as the training set
  }
}

TEST_CASE("stump prediction and tie rule") {
  const Forest f({stump(0.5)}, 2, 1);
  const std::vector<double> right{0.9}, left{0.1}, edge{0.5};
  CHECK(f.predict_label(right) == 1);
  CHECK(f.predict_label(left) == 0);
  CHECK(f.predict_label(edge) == 0);  // x <= threshold goes left
  const auto p = f.predict(left);
  CHECK(p.votes[0] == 0.75);
  CHECK(p.votes[1] == 0.25);

  std::vector<TreeNode> tie(1);
  tie[0] = {-1, 0.0, -1, -1, 0.0, {2, 2}};
  const Forest t({DecisionTree(tie, 2)}, 2, 1);
  CHECK(t.predict_label(right) == 0);

  const std::vector<double> wrong_length{0.1, 0.2};
  CHECK_THROWS_AS(f.predict(wrong_length), ValidationError);
}

TEST_CASE("malformed trees are rejected") {
  std::vector<TreeNode> loop(1);
  loop[0] = {0, 0.5, 0, 0, 0.0, {}};
  CHECK_THROWS_AS(DecisionTree(loop, 2), ValidationError);
  std::vector<TreeNode> short_leaf(1);
  short_leaf[0] = {-1, 0.0, -1, -1, 0.0, {1}};
  CHECK_THROWS_AS(DecisionTree(short_leaf, 2), ValidationError);
  CHECK_THROWS_AS(Forest({stump(0.5)}, 2, 0), ValidationError);
}

TEST_CASE("separable data is re-predicted with 32 trees") {
  const auto d = separable(80, 4, 5);
  const auto forest = train_forest(d.x, d.y, {32, 11, 0, 1});
  for (std::size_t r = 0; r < d.x.rows(); ++r) CHECK(forest.predict_label(d.x.row(r)) == d.y[r]);
}

TEST_CASE("importance normalization") {
  const auto imp = make_importance({3.0, 4.0});
  CHECK(imp.normalized[0] == 0.6);
  CHECK(imp.normalized[1] == 0.8);
  const auto zero = make_importance({0.0, 0.0});
  CHECK(zero.normalized == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(make_importance({-1.0, 2.0}), ValidationError);

  // A forest that only ever splits feature 0.
  const Forest f({stump(0.5), stump(0.2)}, 2, 3);
  const auto p = predictor_importance(f);
  CHECK(p.raw == std::vector<double>{0.25, 0.0, 0.0});
  CHECK(p.normalized == std::vector<double>{1.0, 0.0, 0.0});

  const auto d = separable(50, 8, 6);
  const auto trained = predictor_importance(train_forest(d.x, d.y, {20, 1, 0, 1}));
  double sq = 0;
  for (double v : trained.normalized) sq += v * v;
  CHECK(std::abs(sq - 1.0) < 1e-9);
  // The informative feature dominates.
  CHECK(trained.normalized[0] == *std::max_element(trained.normalized.begin(), trained.normalized.end()));
}

TEST_CASE("threshold rule") {
  ImportanceVector imp{{0.5, 0.1, 0.4}, {0.5, 0.1, 0.4}};
  const auto mask = prune_features(imp, 1.0);
  CHECK(mask.theta == 1.0 / 3.0);
  CHECK(mask.kept == std::vector<std::size_t>{0, 2});
  CHECK(mask.full_dimension == 3);

  ImportanceVector positive{{0.2, 0.3, 0.1}, {0.2, 0.3, 0.1}};
  CHECK(prune_features(positive, 0.0).kept == std::vector<std::size_t>{0, 1, 2});

  ImportanceVector uniform{{0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}};
  CHECK_THROWS_AS(prune_features(uniform, 1.0), EmptySelectionError);
  ImportanceVector zero{{0, 0}, {0, 0}};
  CHECK_THROWS_AS(prune_features(zero, 0.0), EmptySelectionError);
  CHECK_THROWS_AS(prune_features(imp, -1.0), ValidationError);
}

TEST_CASE("pipeline") {
  const auto d = separable(60, 30, 7);
  HyperParams hp{40, 20, 3.5, 9, true};
  const auto p = train_pipeline(d.x, d.y, hp);
  CHECK(p.mask().kept.size() < 30);
  CHECK(std::find(p.mask().kept.begin(), p.mask().kept.end(), 0) != p.mask().kept.end());
  CHECK(p.classifier().num_features() == p.mask().kept.size());
  CHECK(p.classifier().trees().size() == 20);
  for (std::size_t r = 0; r < d.x.rows(); ++r) CHECK(p.predict(d.x.row(r)).label == d.y[r]);

  // Same inputs give the same mask and forest.
  const auto again = train_pipeline(d.x, d.y, hp);
  CHECK(again.mask() == p.mask());
  CHECK(again.classifier() == p.classifier());

  // Without pruning the classifier sees every column.
  hp.prune = false;
  const auto unpruned = train_pipeline(d.x, d.y, hp);
  CHECK(unpruned.mask().kept == full_mask(30).kept);

  const std::vector<double> short_row(29, 0.0);
  CHECK_THROWS_AS(p.predict(short_row), ValidationError);
}

TEST_CASE("alpha zero keeps every feature with positive importance") {
  const auto d = separable(40, 5, 12);
  HyperParams hp{30, 10, 0.0, 2, true};
  const auto p = train_pipeline(d.x, d.y, hp);
  const auto forest = train_forest(d.x, d.y, {30, derive_seed(2, 1), 0, 1});
  const auto imp = predictor_importance(forest);
  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < imp.size(); ++i)
    if (imp.normalized[i] > 0) positive.push_back(i);
  CHECK(p.mask().kept == positive);
}

TEST_CASE("model round trip predicts identically") {
  const auto d = separable(50, 12, 13);
  Model m;
  m.config.components = {Component::jpd};
  m.num_joints = 4;
  m.class_names = {"left", "right"};
  m.pipeline = train_pipeline(d.x, d.y, HyperParams{20, 15, 1.0, 4, true});
  std::stringstream buf;
  write_model(buf, m);
  const auto back = read_model(buf);
  CHECK(back.config == m.config);
  CHECK(back.class_names == m.class_names);
  CHECK(back.pipeline.mask() == m.pipeline.mask());
  CHECK(back.pipeline.classifier() == m.pipeline.classifier());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> u(0, 4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(12);
    for (auto& v : x) v = u(rng);
    const auto a = m.pipeline.predict(x), b = back.pipeline.predict(x);
    CHECK(a.label == b.label);
    CHECK(a.votes == b.votes);
  }

  std::istringstream junk("{\"format\": \"something-else\"}");
  CHECK_THROWS_AS(read_model(junk), ParseError);
  std::istringstream broken("{not json");
  CHECK_THROWS_AS(read_model(broken), ParseError);
}
