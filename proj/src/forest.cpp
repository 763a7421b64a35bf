#include "hdgkit/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hdgkit/error.hpp"
#include "hdgkit/parallel.hpp"

namespace hdg {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ValidationError(fmt::format("feature matrix data has {} values, expected {}x{}", data_.size(), rows_, cols_));
  }
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> columns) const {
  FeatureMatrix out(rows_, columns.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* src = data_.data() + r * cols_;
    double* dst = out.data_.data() + r * columns.size();
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] >= cols_) throw ValidationError(fmt::format("column {} outside matrix", columns[k]));
      dst[k] = src[columns[k]];
    }
  }
  return out;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, int num_classes)
    : nodes_(std::move(nodes)), num_classes_(num_classes) {
  if (nodes_.empty()) throw ValidationError("decision tree needs at least one node");
  if (num_classes_ < 1) throw ValidationError("decision tree needs num_classes >= 1");
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      if (node.class_counts.size() != static_cast<std::size_t>(num_classes_)) {
        throw ValidationError(fmt::format("leaf {} has {} class counts, expected {}", i, node.class_counts.size(),
                                          num_classes_));
      }
    } else if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
      // Children always follow their parent, which also rules out cycles.
      throw ValidationError(fmt::format("internal node {} has invalid children ({}, {})", i, node.left, node.right));
    }
  }
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    const auto f = static_cast<std::size_t>(node->feature);
    node = &nodes_[static_cast<std::size_t>(x[f] <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

Forest::Forest(std::vector<DecisionTree> trees, int num_classes, std::size_t num_features)
    : trees_(std::move(trees)), num_classes_(num_classes), num_features_(num_features) {
  if (trees_.empty()) throw ValidationError("forest needs at least one tree");
  for (const auto& t : trees_) {
    if (t.num_classes() != num_classes_) throw ValidationError("forest trees disagree on num_classes");
    for (const auto& node : t.nodes()) {
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= num_features_) {
        throw ValidationError(fmt::format("tree splits on feature {} of {}", node.feature, num_features_));
      }
    }
  }
}

Prediction Forest::predict(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw ValidationError(fmt::format("feature vector has length {}, forest expects {}", x.size(), num_features_));
  }
  std::vector<std::uint64_t> sum(static_cast<std::size_t>(num_classes_), 0);
  for (const auto& tree : trees_) {
    const auto& leaf = tree.leaf_for(x);
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += leaf.class_counts[c];
  }
  Prediction p;
  const auto total = std::accumulate(sum.begin(), sum.end(), std::uint64_t{0});
  p.votes.resize(sum.size(), 0.0);
  std::uint64_t best = 0;
  for (std::size_t c = 0; c < sum.size(); ++c) {
    if (total > 0) p.votes[c] = static_cast<double>(sum[c]) / static_cast<double>(total);
    if (sum[c] > best) {
      best = sum[c];
      p.label = static_cast<int>(c);
    }
  }
  return p;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, int num_classes, std::uint64_t seed)
      : x_(x), y_(y), num_classes_(num_classes), rng_(seed), perm_(x.cols()) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  }

  DecisionTree build() {
    const std::size_t n = x_.rows();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    rows_.resize(n);
    for (auto& r : rows_) r = pick(rng_);
    total_rows_ = static_cast<double>(n);

    struct Pending {
      int node;
      std::size_t begin, end;
    };
    nodes_.emplace_back();
    std::vector<Pending> stack{{0, 0, n}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const auto split = find_split(job.begin, job.end);
      if (!split) {
        make_leaf(job.node, job.begin, job.end);
        continue;
      }
      const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(job.begin),
                                             rows_.begin() + static_cast<std::ptrdiff_t>(job.end),
                                             [&](std::size_t r) { return x_.at(r, split->feature) <= split->threshold; });
      const auto mid_index = static_cast<std::size_t>(mid - rows_.begin());
      const int left = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      auto& node = nodes_[static_cast<std::size_t>(job.node)];
      node.feature = static_cast<int>(split->feature);
      node.threshold = split->threshold;
      node.left = left;
      node.right = left + 1;
      node.impurity_decrease = split->decrease;
      stack.push_back({left + 1, mid_index, job.end});
      stack.push_back({left, job.begin, mid_index});
    }
    return DecisionTree(std::move(nodes_), num_classes_);
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
    double decrease;
  };

  std::vector<std::int64_t> class_counts(std::size_t begin, std::size_t end) const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes_), 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(y_[rows_[i]])];
    return counts;
  }

  void make_leaf(int index, std::size_t begin, std::size_t end) {
    auto counts = class_counts(begin, end);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.class_counts.assign(counts.begin(), counts.end());
  }

  std::optional<Split> find_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    if (n < 2) return std::nullopt;
    const auto counts = class_counts(begin, end);
    std::int64_t node_sumsq = 0;
    int present = 0;
    for (auto c : counts) {
      node_sumsq += c * c;
      present += c > 0 ? 1 : 0;
    }
    if (present < 2) return std::nullopt;  // pure

    std::optional<Split> best;
    double best_score = -1.0;
    std::size_t informative = 0;
    const std::size_t features = perm_.size();
    values_.resize(n);
    std::vector<std::int64_t> left(counts.size());
    for (std::size_t k = 0; k < features && informative < mtry_; ++k) {
      // Incremental Fisher-Yates: perm_[0..k] is a fresh random draw.
      std::uniform_int_distribution<std::size_t> pick(k, features - 1);
      std::swap(perm_[k], perm_[pick(rng_)]);
      const std::size_t f = perm_[k];

      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = rows_[begin + i];
        values_[i] = {x_.at(r, f), y_[r]};
      }
      std::sort(values_.begin(), values_.end());
      if (values_.front().first == values_.back().first) continue;  // constant in this node
      ++informative;

      std::fill(left.begin(), left.end(), 0);
      std::int64_t sumsq_left = 0;
      std::int64_t sumsq_right = node_sumsq;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(values_[i].second);
        const std::int64_t right_c = counts[c] - left[c];
        sumsq_left += 2 * left[c] + 1;
        sumsq_right -= 2 * right_c - 1;
        ++left[c];
        if (values_[i].first == values_[i + 1].first) continue;
        const auto n_left = static_cast<double>(i + 1);
        const auto n_right = static_cast<double>(n - i - 1);
        const double score = static_cast<double>(sumsq_left) / n_left + static_cast<double>(sumsq_right) / n_right;
        if (score > best_score) {
          best_score = score;
          const double a = values_[i].first;
          const double b = values_[i + 1].first;
          double threshold = a + (b - a) / 2.0;
          if (!(threshold < b)) threshold = a;
          best = Split{f, threshold, 0.0};
        }
      }
    }
    if (best) {
      // Weighted Gini decrease: (n G - n_l G_l - n_r G_r) / N, with n G = n - sumsq / n.
      best->decrease = std::max(0.0, (best_score - static_cast<double>(node_sumsq) / static_cast<double>(n)) / total_rows_);
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  int num_classes_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> perm_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> rows_;
  std::vector<std::pair<double, int>> values_;
  std::vector<TreeNode> nodes_;
  double total_rows_ = 1.0;
};

}  // namespace

Forest train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestOptions& options) {
  if (options.trees < 1) throw ValidationError(fmt::format("forest needs >= 1 tree (got {})", options.trees));
  if (x.rows() < 2) throw ValidationError(fmt::format("forest needs >= 2 training rows (got {})", x.rows()));
  if (y.size() != x.rows()) {
    throw ValidationError(fmt::format("label count {} does not match row count {}", y.size(), x.rows()));
  }
  if (x.cols() < 1) throw ValidationError("forest needs >= 1 feature");
  int max_label = 0;
  for (int label : y) {
    if (label < 0) throw ValidationError(fmt::format("negative class label {}", label));
    max_label = std::max(max_label, label);
  }
  const int num_classes = options.num_classes > 0 ? options.num_classes : max_label + 1;
  if (max_label >= num_classes) {
    throw ValidationError(fmt::format("class label {} outside [0, {})", max_label, num_classes));
  }
  if (std::all_of(y.begin(), y.end(), [&](int l) { return l == y.front(); })) {
    throw ValidationError("forest training needs at least 2 distinct class labels");
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (double v : x.row(r)) {
      if (!std::isfinite(v)) throw ValidationError(fmt::format("non-finite feature value in row {}", r));
    }
  }

  std::vector<DecisionTree> trees(static_cast<std::size_t>(options.trees));
  parallel_for(trees.size(), options.jobs, [&](std::size_t i) {
    TreeBuilder builder(x, y, num_classes, derive_seed(options.seed, i));
    trees[i] = builder.build();
  });
  return Forest(std::move(trees), num_classes, x.cols());
}

ImportanceVector make_importance(std::vector<double> raw) {
  ImportanceVector out;
  double sumsq = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("raw importance values must be finite and >= 0");
    sumsq += v * v;
  }
  out.normalized.assign(raw.size(), 0.0);
  if (sumsq > 0.0) {
    const double norm = std::sqrt(sumsq);
    for (std::size_t i = 0; i < raw.size(); ++i) out.normalized[i] = raw[i] / norm;
  }
  out.raw = std::move(raw);
  return out;
}

ImportanceVector predictor_importance(const Forest& forest) {
  std::vector<double> raw(forest.num_features(), 0.0);
  for (const auto& tree : forest.trees()) {
    for (const auto& node : tree.nodes()) {
      if (!node.is_leaf()) raw[static_cast<std::size_t>(node.feature)] += node.impurity_decrease;
    }
  }
  const auto trees = static_cast<double>(forest.trees().size());
  for (auto& v : raw) v /= trees;
  return make_importance(std::move(raw));
}

FeatureMask prune_features(const ImportanceVector& importance, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be finite and >= 0");
  const auto& p = importance.normalized;
  if (p.empty()) throw EmptySelectionError("cannot prune an empty importance vector");
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) throw EmptySelectionError("all predictor importances are zero");

  FeatureMask mask;
  mask.alpha = alpha;
  mask.full_dimension = p.size();
  mask.theta = alpha * total / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > mask.theta) mask.kept.push_back(i);
  }
  if (mask.kept.empty()) {
    throw EmptySelectionError(
        fmt::format("no predictor exceeds theta = {} (alpha = {} is too large)", mask.theta, alpha));
  }
  return mask;
}

FeatureMask full_mask(std::size_t dimension) {
  FeatureMask mask;
  mask.kept.resize(dimension);
  std::iota(mask.kept.begin(), mask.kept.end(), std::size_t{0});
  mask.full_dimension = dimension;
  return mask;
}

}  // namespace hdg
