#pragma once

// Random decision forest (bagged CART trees, Gini impurity) together with the
// importance-based feature pruning used ahead of the classifier forest.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hdgkit/core.hpp"

namespace hdg {

/// Dense row-major sample x feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  /// Copy restricted to the given columns, in the given order.
  FeatureMatrix select_columns(std::span<const std::size_t> columns) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TreeNode {
  int feature = -1;                          // -1 marks a leaf
  double threshold = 0.0;                    // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double impurity_decrease = 0.0;            // weighted Gini decrease of this split
  std::vector<std::uint32_t> class_counts;   // leaves only: training rows per class

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  /// Node 0 is the root. Throws ValidationError on malformed node arrays.
  DecisionTree(std::vector<TreeNode> nodes, int num_classes);

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  int num_classes() const noexcept { return num_classes_; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  int num_classes_ = 0;
};

struct Prediction {
  int label = 0;
  std::vector<double> votes;  // summed leaf histograms, normalised to sum 1
};

class Forest {
 public:
  Forest() = default;
  Forest(std::vector<DecisionTree> trees, int num_classes, std::size_t num_features);

  /// argmax of the summed leaf class histograms; ties go to the lowest class.
  Prediction predict(std::span<const double> x) const;
  int predict_label(std::span<const double> x) const { return predict(x).label; }

  std::span<const DecisionTree> trees() const noexcept { return trees_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t num_features() const noexcept { return num_features_; }

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<DecisionTree> trees_;
  int num_classes_ = 0;
  std::size_t num_features_ = 0;
};

struct ForestOptions {
  int trees = 128;
  std::uint64_t seed = 0;
  int num_classes = 0;  // 0: infer as max(label) + 1
  int jobs = 1;
};

/// Bootstrap of n rows per tree, sqrt(F) candidate features per split, grown
/// until pure or fewer than 2 rows. Tree i draws from derive_seed(seed, i).
Forest train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestOptions& options);

/// p (raw, mean impurity decrease per tree) and p_hat = p / ||p||_2.
struct ImportanceVector {
  std::vector<double> raw;
  std::vector<double> normalized;

  std::size_t size() const noexcept { return raw.size(); }
};

ImportanceVector make_importance(std::vector<double> raw);
ImportanceVector predictor_importance(const Forest& forest);

struct FeatureMask {
  std::vector<std::size_t> kept;  // sorted unique indices into the full feature space
  double theta = 0.0;
  double alpha = 0.0;
  std::size_t full_dimension = 0;

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

/// Keeps features with p_hat_i > theta, theta = alpha * mean(p_hat).
/// Throws EmptySelectionError when nothing survives or importance is all zero.
FeatureMask prune_features(const ImportanceVector& importance, double alpha);

FeatureMask full_mask(std::size_t dimension);

/// Pruning forest, feature mask and classifier forest on the masked columns.
class Pipeline {
 public:
  Pipeline() = default;
  Pipeline(HyperParams hp, FeatureMask mask, Forest classifier);

  Prediction predict(std::span<const double> full_features) const;

  const HyperParams& hyperparams() const noexcept { return hp_; }
  const FeatureMask& mask() const noexcept { return mask_; }
  const Forest& classifier() const noexcept { return classifier_; }

 private:
  HyperParams hp_;
  FeatureMask mask_;
  Forest classifier_;
};

Pipeline train_pipeline(const FeatureMatrix& x, std::span<const int> y, const HyperParams& hp, int num_classes = 0,
                        int jobs = 1);

}  // namespace hdg
