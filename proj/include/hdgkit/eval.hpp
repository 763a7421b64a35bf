#pragma once

// Evaluation protocols: per-class accuracy, confusion matrices, half-subject and
// cross-view split enumeration, protocol runs, feature-combination ablations and
// the trees x alpha sweep.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdgkit/core.hpp"
#include "hdgkit/forest.hpp"
#include "hdgkit/ingest.hpp"

namespace hdg {

struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::string descriptor;
};

/// Throws ValidationError unless both sides are non-empty, disjoint and drawn
/// from the manifest.
void validate_plan(const SplitPlan& plan, const DatasetManifest& manifest);

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void add(int true_class, int predicted_class, std::int64_t count = 1);
  std::int64_t at(int true_class, int predicted_class) const;
  std::int64_t row_sum(int true_class) const;
  std::int64_t trace() const;
  std::int64_t total() const;
  int num_classes() const noexcept { return classes_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_;
  std::vector<std::int64_t> counts_;
};

/// correct(a) / tested(a). Throws ValidationError when class a has no test samples.
double class_accuracy(const ConfusionMatrix& confusion, int a);

struct EvalReport {
  ConfusionMatrix confusion{1};
  std::vector<std::optional<double>> per_class_accuracy;  // nullopt: class absent from the test set
  double average_accuracy = 0.0;                          // unweighted mean over tested classes
  std::string descriptor;
  HdgConfig config;
  HyperParams hyperparams;
  std::size_t selected_features = 0;
  std::size_t full_features = 0;
};

EvalReport make_report(ConfusionMatrix confusion, std::string descriptor, const HdgConfig& config,
                       const HyperParams& hp);

/// Every subset of ceil(n/2) subjects trains, the rest test. Lexicographic order.
std::vector<SplitPlan> half_subject_splits(const DatasetManifest& manifest);

/// Every pair of views trains; each remaining view tests on its own.
std::vector<SplitPlan> cross_view_splits(const DatasetManifest& manifest);

/// V1&V2 -> V3 for datasets with >= 3 views, otherwise the first half-subject plan.
SplitPlan validation_plan(const DatasetManifest& manifest);

/// Thread-safe feature cache keyed by (sample_id, config hash).
class FeatureCache {
 public:
  std::shared_ptr<const FeatureVector> find(const std::string& sample_id, const HdgConfig& config) const;
  std::shared_ptr<const FeatureVector> insert(const std::string& sample_id, const HdgConfig& config,
                                              FeatureVector features);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::uint64_t>, std::shared_ptr<const FeatureVector>> entries_;
};

struct EvalOptions {
  int jobs = 1;
  FeatureCache* cache = nullptr;  // optional shared cache
};

struct PlanOutcome {
  SplitPlan plan;
  std::optional<EvalReport> report;
  std::string skip_reason;  // non-empty when the plan was skipped
};

struct ProtocolResult {
  std::vector<PlanOutcome> outcomes;
  double mean_accuracy = 0.0;  // mean of average_accuracy over evaluated plans
  std::size_t evaluated = 0;
};

/// Permutation-invariant mean (values are summed in sorted order).
double mean_of(std::vector<double> values);

/// Plan i trains with seed derive_seed(hp.rng_seed, i). Plans whose training
/// set misses a class are skipped with a reason.
ProtocolResult run_protocol(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                            const HdgConfig& config, const HyperParams& hp, std::span<const SplitPlan> plans,
                            const EvalOptions& options = {});

/// The ten component combinations evaluated for HDG, in reporting order.
std::vector<ComponentSet> ablation_combinations();

struct AblationRow {
  ComponentSet components;
  std::size_t feature_length = 0;
  double mean_accuracy = 0.0;
  std::size_t evaluated = 0;
};

std::vector<AblationRow> ablation_study(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                                        const HdgConfig& base_config, const HyperParams& hp,
                                        std::span<const SplitPlan> plans, const EvalOptions& options = {});

struct SweepCell {
  int trees = 0;
  double alpha = 0.0;
  std::optional<double> accuracy;  // nullopt: failed cell
  std::string failure;
};

struct SweepGrid {
  std::vector<int> trees;
  std::vector<double> alphas;
  std::vector<SweepCell> cells;  // row-major: trees outer, alpha inner

  const SweepCell& at(std::size_t trees_index, std::size_t alpha_index) const {
    return cells[trees_index * alphas.size() + alpha_index];
  }
  /// Highest accuracy; ties go to fewer trees, then smaller alpha.
  std::optional<SweepCell> best() const;
};

/// `trees_grid` varies the pruning forest size; the classifier keeps hp.classifier_trees.
SweepGrid hyperparameter_sweep(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                               const HdgConfig& config, std::span<const int> trees_grid,
                               std::span<const double> alpha_grid, const HyperParams& hp, const SplitPlan& plan,
                               const EvalOptions& options = {});

// CSV writers. Reals use 6 significant digits.
std::string format_real(double v);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& confusion, const DatasetManifest& manifest);
void write_plan_summary_csv(std::ostream& out, const ProtocolResult& result);
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
void write_sweep_csv(std::ostream& out, const SweepGrid& grid);

}  // namespace hdg
