#include "hdgkit/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "hdgkit/config_json.hpp"
#include "hdgkit/error.hpp"
#include "hdgkit/features.hpp"
#include "hdgkit/parallel.hpp"

namespace hdg {

// ---------------------------------------------------------------- confusion

ConfusionMatrix::ConfusionMatrix(int num_classes) : classes_(num_classes) {
  if (num_classes < 1) throw ValidationError("confusion matrix needs >= 1 class");
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

void ConfusionMatrix::add(int true_class, int predicted_class, std::int64_t count) {
  if (true_class < 0 || true_class >= classes_ || predicted_class < 0 || predicted_class >= classes_) {
    throw ValidationError(fmt::format("confusion entry ({}, {}) outside {} classes", true_class, predicted_class,
                                      classes_));
  }
  if (count < 0) throw ValidationError("confusion counts must be >= 0");
  counts_[static_cast<std::size_t>(true_class) * classes_ + predicted_class] += count;
}

std::int64_t ConfusionMatrix::at(int true_class, int predicted_class) const {
  return counts_.at(static_cast<std::size_t>(true_class) * classes_ + predicted_class);
}

std::int64_t ConfusionMatrix::row_sum(int true_class) const {
  std::int64_t s = 0;
  for (int p = 0; p < classes_; ++p) s += at(true_class, p);
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int c = 0; c < classes_; ++c) s += at(c, c);
  return s;
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

double class_accuracy(const ConfusionMatrix& confusion, int a) {
  if (a < 0 || a >= confusion.num_classes()) throw ValidationError(fmt::format("class {} outside confusion matrix", a));
  const auto tested = confusion.row_sum(a);
  if (tested == 0) throw ValidationError(fmt::format("class {} has no test samples", a));
  return static_cast<double>(confusion.at(a, a)) / static_cast<double>(tested);
}

EvalReport make_report(ConfusionMatrix confusion, std::string descriptor, const HdgConfig& config,
                       const HyperParams& hp) {
  EvalReport r;
  std::vector<double> present;
  for (int c = 0; c < confusion.num_classes(); ++c) {
    if (confusion.row_sum(c) == 0) {
      r.per_class_accuracy.push_back(std::nullopt);
    } else {
      r.per_class_accuracy.push_back(class_accuracy(confusion, c));
      present.push_back(*r.per_class_accuracy.back());
    }
  }
  if (present.empty()) throw ValidationError("report has no tested classes");
  double sum = 0.0;
  for (double a : present) sum += a;
  r.average_accuracy = sum / static_cast<double>(present.size());
  r.confusion = std::move(confusion);
  r.descriptor = std::move(descriptor);
  r.config = config;
  r.hyperparams = hp;
  return r;
}

// ---------------------------------------------------------------- splits

void validate_plan(const SplitPlan& plan, const DatasetManifest& manifest) {
  if (plan.train_ids.empty()) throw ValidationError(fmt::format("plan '{}' has an empty training set", plan.descriptor));
  if (plan.test_ids.empty()) throw ValidationError(fmt::format("plan '{}' has an empty test set", plan.descriptor));
  std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  if (train.size() != plan.train_ids.size()) {
    throw ValidationError(fmt::format("plan '{}' repeats a training sample", plan.descriptor));
  }
  std::set<std::string> test;
  for (const auto& id : plan.test_ids) {
    if (train.count(id) != 0) {
      throw ValidationError(fmt::format("plan '{}': sample '{}' is in both train and test", plan.descriptor, id));
    }
    if (!test.insert(id).second) throw ValidationError(fmt::format("plan '{}' repeats a test sample", plan.descriptor));
  }
  for (const auto* ids : {&plan.train_ids, &plan.test_ids}) {
    for (const auto& id : *ids) {
      if (!manifest.find(id)) throw ValidationError(fmt::format("plan '{}': unknown sample '{}'", plan.descriptor, id));
    }
  }
}

namespace {

template <typename Key>
std::vector<int> distinct_sorted(const DatasetManifest& manifest, Key key) {
  std::set<int> values;
  for (const auto& s : manifest.samples) values.insert(key(s));
  return {values.begin(), values.end()};
}

std::string one_based_list(std::span<const int> ids, std::string_view prefix, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += sep;
    out += fmt::format("{}{}", prefix, ids[i] + 1);
  }
  return out;
}

}  // namespace

std::vector<SplitPlan> half_subject_splits(const DatasetManifest& manifest) {
  const auto subjects = distinct_sorted(manifest, [](const ManifestEntry& e) { return e.subject_id; });
  const std::size_t n = subjects.size();
  if (n < 2) throw ValidationError(fmt::format("half-subject splits need >= 2 subjects (found {})", n));
  const std::size_t k = (n + 1) / 2;

  std::vector<SplitPlan> plans;
  std::vector<bool> chosen(n, false);
  std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<int> train_subjects;
    std::set<int> train_set;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) {
        train_subjects.push_back(subjects[i]);
        train_set.insert(subjects[i]);
      }
    }
    SplitPlan plan;
    plan.descriptor = "subjects{" + one_based_list(train_subjects, "", ",") + "}";
    for (const auto& s : manifest.samples) {
      (train_set.count(s.subject_id) ? plan.train_ids : plan.test_ids).push_back(s.sample_id);
    }
    plans.push_back(std::move(plan));
  } while (std::prev_permutation(chosen.begin(), chosen.end()));
  return plans;
}

std::vector<SplitPlan> cross_view_splits(const DatasetManifest& manifest) {
  const auto views = distinct_sorted(manifest, [](const ManifestEntry& e) { return e.view_id; });
  if (views.size() < 3) {
    throw ValidationError(fmt::format("cross-view splits need >= 3 views (dataset has {})", views.size()));
  }
  std::vector<SplitPlan> plans;
  for (std::size_t a = 0; a < views.size(); ++a) {
    for (std::size_t b = a + 1; b < views.size(); ++b) {
      for (std::size_t t = 0; t < views.size(); ++t) {
        if (t == a || t == b) continue;
        const int train_views[] = {views[a], views[b]};
        const int test_view[] = {views[t]};
        SplitPlan plan;
        plan.descriptor = fmt::format("train {} / test {}", one_based_list(train_views, "V", "&"),
                                      one_based_list(test_view, "V", ""));
        for (const auto& s : manifest.samples) {
          if (s.view_id == views[a] || s.view_id == views[b]) {
            plan.train_ids.push_back(s.sample_id);
          } else if (s.view_id == views[t]) {
            plan.test_ids.push_back(s.sample_id);
          }
        }
        plans.push_back(std::move(plan));
      }
    }
  }
  return plans;
}

SplitPlan validation_plan(const DatasetManifest& manifest) {
  const auto views = distinct_sorted(manifest, [](const ManifestEntry& e) { return e.view_id; });
  if (views.size() >= 3) return cross_view_splits(manifest).front();
  return half_subject_splits(manifest).front();
}

// ---------------------------------------------------------------- cache

std::shared_ptr<const FeatureVector> FeatureCache::find(const std::string& sample_id, const HdgConfig& config) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find({sample_id, config_hash(config)});
  return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<const FeatureVector> FeatureCache::insert(const std::string& sample_id, const HdgConfig& config,
                                                          FeatureVector features) {
  auto ptr = std::make_shared<const FeatureVector>(std::move(features));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.try_emplace({sample_id, config_hash(config)}, std::move(ptr));
  return it->second;
}

std::size_t FeatureCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------- protocol

double mean_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace {

using FeatureTable = std::vector<std::shared_ptr<const FeatureVector>>;

std::unordered_map<std::string, std::size_t> index_samples(std::span<const ActionSample> samples) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!index.emplace(samples[i].sample_id, i).second) {
      throw ValidationError(fmt::format("duplicate sample '{}' in sample list", samples[i].sample_id));
    }
  }
  return index;
}

FeatureTable extract_needed(std::span<const ActionSample> samples, const std::vector<std::size_t>& needed,
                            const HdgConfig& config, const EvalOptions& options) {
  FeatureTable table(samples.size());
  parallel_for(needed.size(), options.jobs, [&](std::size_t k) {
    const auto& sample = samples[needed[k]];
    std::shared_ptr<const FeatureVector> fv;
    if (options.cache) fv = options.cache->find(sample.sample_id, config);
    if (!fv) {
      auto computed = extract_hdg(sample, config);
      fv = options.cache ? options.cache->insert(sample.sample_id, config, std::move(computed))
                         : std::make_shared<const FeatureVector>(std::move(computed));
    }
    table[needed[k]] = std::move(fv);
  });
  return table;
}

PlanOutcome evaluate_plan(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                          const std::unordered_map<std::string, std::size_t>& index, const FeatureTable& features,
                          const HdgConfig& config, const HyperParams& hp, const SplitPlan& plan, int jobs) {
  PlanOutcome outcome;
  outcome.plan = plan;

  std::vector<bool> trained(static_cast<std::size_t>(manifest.num_classes), false);
  for (const auto& id : plan.train_ids) trained[static_cast<std::size_t>(samples[index.at(id)].class_label)] = true;
  std::vector<int> missing;
  for (int c = 0; c < manifest.num_classes; ++c) {
    if (!trained[static_cast<std::size_t>(c)]) missing.push_back(c);
  }
  if (!missing.empty()) {
    outcome.skip_reason = fmt::format("training set lacks class(es) {}", fmt::join(missing, ","));
    return outcome;
  }

  const std::size_t dim = features[index.at(plan.train_ids.front())]->values.size();
  FeatureMatrix x(plan.train_ids.size(), dim);
  std::vector<int> y(plan.train_ids.size());
  for (std::size_t r = 0; r < plan.train_ids.size(); ++r) {
    const auto i = index.at(plan.train_ids[r]);
    const auto& values = features[i]->values;
    if (values.size() != dim) throw ValidationError("samples produced feature vectors of different lengths");
    std::copy(values.begin(), values.end(), x.row(r).begin());
    y[r] = samples[i].class_label;
  }
  const Pipeline pipeline = train_pipeline(x, y, hp, manifest.num_classes, jobs);

  ConfusionMatrix confusion(manifest.num_classes);
  for (const auto& id : plan.test_ids) {
    const auto i = index.at(id);
    confusion.add(samples[i].class_label, pipeline.predict(features[i]->values).label);
  }
  auto report = make_report(std::move(confusion), plan.descriptor, config, hp);
  report.selected_features = pipeline.mask().kept.size();
  report.full_features = dim;
  outcome.report = std::move(report);
  return outcome;
}

}  // namespace

ProtocolResult run_protocol(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                            const HdgConfig& config, const HyperParams& hp, std::span<const SplitPlan> plans,
                            const EvalOptions& options) {
  config.validate();
  hp.validate();
  if (plans.empty()) throw ValidationError("protocol has no plans");
  const auto index = index_samples(samples);
  std::set<std::size_t> needed_set;
  for (const auto& plan : plans) {
    validate_plan(plan, manifest);
    for (const auto* ids : {&plan.train_ids, &plan.test_ids}) {
      for (const auto& id : *ids) {
        auto it = index.find(id);
        if (it == index.end()) {
          throw ValidationError(fmt::format("plan '{}': sample '{}' was not loaded", plan.descriptor, id));
        }
        needed_set.insert(it->second);
      }
    }
  }
  const std::vector<std::size_t> needed(needed_set.begin(), needed_set.end());
  spdlog::debug("extracting {} feature vectors ({})", needed.size(), config.components.to_string());
  const FeatureTable features = extract_needed(samples, needed, config, options);

  ProtocolResult result;
  result.outcomes.resize(plans.size());
  const int outer = plans.size() > 1 ? options.jobs : 1;
  const int inner = plans.size() > 1 ? 1 : options.jobs;
  parallel_for(plans.size(), outer, [&](std::size_t i) {
    HyperParams plan_hp = hp;
    plan_hp.rng_seed = derive_seed(hp.rng_seed, i);
    result.outcomes[i] = evaluate_plan(manifest, samples, index, features, config, plan_hp, plans[i], inner);
    if (result.outcomes[i].report) {
      spdlog::debug("plan {}/{} '{}': accuracy {:.4f}", i + 1, plans.size(), plans[i].descriptor,
                    result.outcomes[i].report->average_accuracy);
    } else {
      spdlog::warn("plan '{}' skipped: {}", plans[i].descriptor, result.outcomes[i].skip_reason);
    }
  });

  std::vector<double> accuracies;
  for (const auto& o : result.outcomes) {
    if (o.report) accuracies.push_back(o.report->average_accuracy);
  }
  result.evaluated = accuracies.size();
  result.mean_accuracy = mean_of(std::move(accuracies));
  return result;
}

std::vector<ComponentSet> ablation_combinations() {
  using C = Component;
  return {{C::hod},
          {C::hodg},
          {C::jpd},
          {C::jmv},
          {C::hod, C::hodg},
          {C::jpd, C::jmv},
          {C::hod, C::hodg, C::jpd},
          {C::hod, C::hodg, C::jmv},
          {C::hodg, C::jpd, C::jmv},
          ComponentSet::all()};
}

std::vector<AblationRow> ablation_study(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                                        const HdgConfig& base_config, const HyperParams& hp,
                                        std::span<const SplitPlan> plans, const EvalOptions& options) {
  std::vector<AblationRow> rows;
  for (const auto& combo : ablation_combinations()) {
    HdgConfig config = base_config;
    config.components = combo;
    spdlog::info("ablation: {}", combo.to_string());
    const auto result = run_protocol(manifest, samples, config, hp, plans, options);
    AblationRow row;
    row.components = combo;
    row.feature_length = layout_from_config(config, manifest.num_joints).total_length();
    row.mean_accuracy = result.mean_accuracy;
    row.evaluated = result.evaluated;
    rows.push_back(row);
  }
  return rows;
}

std::optional<SweepCell> SweepGrid::best() const {
  std::optional<SweepCell> best;
  for (const auto& cell : cells) {
    if (!cell.accuracy) continue;
    if (!best || *cell.accuracy > *best->accuracy ||
        (*cell.accuracy == *best->accuracy &&
         (cell.trees < best->trees || (cell.trees == best->trees && cell.alpha < best->alpha)))) {
      best = cell;
    }
  }
  return best;
}

SweepGrid hyperparameter_sweep(const DatasetManifest& manifest, std::span<const ActionSample> samples,
                               const HdgConfig& config, std::span<const int> trees_grid,
                               std::span<const double> alpha_grid, const HyperParams& hp, const SplitPlan& plan,
                               const EvalOptions& options) {
  if (trees_grid.empty() || alpha_grid.empty()) throw ValidationError("sweep grids must not be empty");
  SweepGrid grid;
  grid.trees.assign(trees_grid.begin(), trees_grid.end());
  grid.alphas.assign(alpha_grid.begin(), alpha_grid.end());
  for (int t : grid.trees) {
    for (double a : grid.alphas) {
      HyperParams cell_hp = hp;
      cell_hp.pruning_trees = t;
      cell_hp.alpha = a;
      cell_hp.validate();
      grid.cells.push_back({t, a, std::nullopt, {}});
    }
  }

  // Extract once up front so every cell hits the cache.
  FeatureCache local_cache;
  EvalOptions cell_options = options;
  if (!cell_options.cache) cell_options.cache = &local_cache;
  {
    const auto index = index_samples(samples);
    validate_plan(plan, manifest);
    std::set<std::size_t> needed;
    for (const auto* ids : {&plan.train_ids, &plan.test_ids}) {
      for (const auto& id : *ids) {
        auto it = index.find(id);
        if (it == index.end()) throw ValidationError(fmt::format("sweep plan: sample '{}' was not loaded", id));
        needed.insert(it->second);
      }
    }
    extract_needed(samples, {needed.begin(), needed.end()}, config, cell_options);
  }

  const int outer = options.jobs;
  cell_options.jobs = 1;
  const SplitPlan plans[] = {plan};
  parallel_for(grid.cells.size(), outer, [&](std::size_t i) {
    auto& cell = grid.cells[i];
    HyperParams cell_hp = hp;
    cell_hp.pruning_trees = cell.trees;
    cell_hp.alpha = cell.alpha;
    try {
      const auto result = run_protocol(manifest, samples, config, cell_hp, plans, cell_options);
      if (result.evaluated == 0) {
        cell.failure = result.outcomes.front().skip_reason;
      } else {
        cell.accuracy = result.mean_accuracy;
      }
    } catch (const EmptySelectionError& e) {
      cell.failure = e.what();
    }
    spdlog::debug("sweep cell trees={} alpha={}: {}", cell.trees, cell.alpha,
                  cell.accuracy ? fmt::format("{:.4f}", *cell.accuracy) : "failed: " + cell.failure);
  });
  return grid;
}

}  // namespace hdg
