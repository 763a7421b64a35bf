#include <fmt/format.h>

#include "hdgkit/error.hpp"
#include "hdgkit/forest.hpp"

namespace hdg {

namespace {
constexpr std::uint64_t kPruningStream = 1;
constexpr std::uint64_t kClassifierStream = 2;
}  // namespace

Pipeline::Pipeline(HyperParams hp, FeatureMask mask, Forest classifier)
    : hp_(hp), mask_(std::move(mask)), classifier_(std::move(classifier)) {
  if (mask_.kept.size() != classifier_.num_features()) {
    throw ValidationError(fmt::format("mask keeps {} features but classifier expects {}", mask_.kept.size(),
                                      classifier_.num_features()));
  }
  for (std::size_t i = 0; i < mask_.kept.size(); ++i) {
    if (mask_.kept[i] >= mask_.full_dimension || (i > 0 && mask_.kept[i] <= mask_.kept[i - 1])) {
      throw ValidationError("feature mask indices must be sorted, unique and inside the full dimension");
    }
  }
}

Prediction Pipeline::predict(std::span<const double> full_features) const {
  if (full_features.size() != mask_.full_dimension) {
    throw ValidationError(fmt::format("feature vector has length {}, pipeline expects {}", full_features.size(),
                                      mask_.full_dimension));
  }
  std::vector<double> selected(mask_.kept.size());
  for (std::size_t k = 0; k < selected.size(); ++k) selected[k] = full_features[mask_.kept[k]];
  return classifier_.predict(selected);
}

Pipeline train_pipeline(const FeatureMatrix& x, std::span<const int> y, const HyperParams& hp, int num_classes,
                        int jobs) {
  hp.validate();
  FeatureMask mask;
  if (hp.prune) {
    const Forest pruning = train_forest(
        x, y, {hp.pruning_trees, derive_seed(hp.rng_seed, kPruningStream), num_classes, jobs});
    mask = prune_features(predictor_importance(pruning), hp.alpha);
  } else {
    mask = full_mask(x.cols());
    mask.alpha = hp.alpha;
  }
  const FeatureMatrix selected = mask.kept.size() == x.cols() ? x : x.select_columns(mask.kept);
  Forest classifier = train_forest(
      selected, y, {hp.classifier_trees, derive_seed(hp.rng_seed, kClassifierStream), num_classes, jobs});
  return Pipeline(hp, std::move(mask), std::move(classifier));
}

}  // namespace hdg
