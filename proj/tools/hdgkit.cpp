// hdgkit command-line interface: synth, extract, eval, sweep, train, predict.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime error.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hdgkit/config_json.hpp"
#include "hdgkit/core.hpp"
#include "hdgkit/error.hpp"
#include "hdgkit/eval.hpp"
#include "hdgkit/features.hpp"
#include "hdgkit/forest.hpp"
#include "hdgkit/ingest.hpp"
#include "hdgkit/model_io.hpp"
#include "hdgkit/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::string dataset;
  std::string out = ".";
  std::string model;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string protocol = "half-subject";
  bool ablation = false;
  std::vector<int> train_subjects;  // 1-based; empty = protocol default
  std::vector<int> trees_grid{64, 130};
  std::vector<double> alpha_grid{0.0, 3.5};
  hdg::HdgConfig hdg;
  hdg::HyperParams hp;
  hdg::SynthSpec synth;
};

json synth_to_json(const hdg::SynthSpec& s) {
  return {{"num_classes", s.num_classes}, {"num_subjects", s.num_subjects}, {"num_views", s.num_views},
          {"reps_per_cell", s.reps_per_cell}, {"height", s.height}, {"width", s.width},
          {"frames", s.frames}, {"num_joints", s.num_joints}, {"noise_level", s.noise_level},
          {"skeleton_noise", s.skeleton_noise}};
}

void synth_from_json(const json& j, hdg::SynthSpec& s) {
  s.num_classes = j.value("num_classes", s.num_classes);
  s.num_subjects = j.value("num_subjects", s.num_subjects);
  s.num_views = j.value("num_views", s.num_views);
  s.reps_per_cell = j.value("reps_per_cell", s.reps_per_cell);
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.frames = j.value("frames", s.frames);
  s.num_joints = j.value("num_joints", s.num_joints);
  s.noise_level = j.value("noise_level", s.noise_level);
  s.skeleton_noise = j.value("skeleton_noise", s.skeleton_noise);
}

json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"dataset", c.dataset},
          {"out", c.out},
          {"model", c.model},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"protocol", c.protocol},
          {"ablation", c.ablation},
          {"train_subjects", c.train_subjects},
          {"sweep", {{"trees", c.trees_grid}, {"alpha", c.alpha_grid}}},
          {"hdg", c.hdg},
          {"hyperparams", c.hp},
          {"synth", synth_to_json(c.synth)}};
}

void merge_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw hdg::IoError(fmt::format("cannot open config file '{}'", path));
  json j;
  try {
    j = json::parse(in);
    c.dataset = j.value("dataset", c.dataset);
    c.out = j.value("out", c.out);
    c.model = j.value("model", c.model);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    c.protocol = j.value("protocol", c.protocol);
    c.ablation = j.value("ablation", c.ablation);
    c.train_subjects = j.value("train_subjects", c.train_subjects);
    if (j.contains("sweep")) {
      c.trees_grid = j["sweep"].value("trees", c.trees_grid);
      c.alpha_grid = j["sweep"].value("alpha", c.alpha_grid);
    }
    if (j.contains("hdg")) j["hdg"].get_to(c.hdg);
    if (j.contains("hyperparams")) j["hyperparams"].get_to(c.hp);
    if (j.contains("synth")) synth_from_json(j["synth"], c.synth);
  } catch (const json::exception& e) {
    throw hdg::ParseError(fmt::format("{}: {}", path, e.what()));
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string token = text.substr(start, end - start);
    token.erase(0, token.find_first_not_of(' '));
    token.erase(token.find_last_not_of(' ') + 1);
    if (!token.empty()) {
      T value{};
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw hdg::ValidationError(fmt::format("{}: '{}' is not a number", flag, token));
      }
      out.push_back(value);
    }
    start = end + 1;
  }
  if (out.empty()) throw hdg::ValidationError(fmt::format("{} needs a non-empty comma-separated list", flag));
  return out;
}

hdg::GridDims parse_dims(const std::string& text, const char* flag) {
  auto v = parse_list<int>(text, flag);
  if (v.size() != 3) throw hdg::ValidationError(fmt::format("{} needs three values x,y,t", flag));
  return {v[0], v[1], v[2]};
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("hdgkit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("HDGKIT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void prepare_out_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw hdg::IoError(fmt::format("cannot create output directory '{}': {}", c.out, ec.message()));
  std::ofstream out(fs::path(c.out) / "run_config.json");
  if (!out) throw hdg::IoError(fmt::format("output directory '{}' is not writable", c.out));
  out << to_json(c).dump(2) << '\n';
  if (!out) throw hdg::IoError(fmt::format("failed writing run_config.json in '{}'", c.out));
}

std::ofstream open_output(const RunConfig& c, const std::string& name) {
  const auto path = fs::path(c.out) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hdg::IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

hdg::DatasetManifest require_dataset(const RunConfig& c) {
  if (c.dataset.empty()) throw hdg::ValidationError("--dataset is required");
  fs::path path = c.dataset;
  if (fs::is_directory(path)) path /= "manifest.json";
  return hdg::load_manifest(path);
}

hdg::SplitPlan subject_plan(const hdg::DatasetManifest& manifest, const std::vector<int>& one_based) {
  std::set<int> train;
  for (int s : one_based) train.insert(s - 1);
  hdg::SplitPlan plan;
  plan.descriptor = "subjects{";
  bool first = true;
  for (int s : train) {
    plan.descriptor += fmt::format("{}{}", first ? "" : ",", s + 1);
    first = false;
  }
  plan.descriptor += "}";
  for (const auto& e : manifest.samples) {
    (train.count(e.subject_id) ? plan.train_ids : plan.test_ids).push_back(e.sample_id);
  }
  return plan;
}

// ---------------------------------------------------------------- commands

int cmd_synth(const RunConfig& c) {
  auto spec = c.synth;
  spec.rng_seed = c.seed;
  const auto dataset = hdg::generate_synthetic(spec);
  prepare_out_dir(c);
  hdg::write_dataset(dataset, c.out);
  spdlog::info("wrote synthetic dataset to {}", c.out);
  std::cout << dataset.samples.size() << " samples\n";
  return 0;
}

int cmd_extract(const RunConfig& c) {
  const auto manifest = require_dataset(c);
  c.hdg.validate();
  prepare_out_dir(c);

  const auto n = manifest.samples.size();
  std::vector<std::optional<hdg::FeatureVector>> features(n);
  std::vector<std::string> errors(n);
  hdg::parallel_for(n, c.jobs, [&](std::size_t i) {
    try {
      const auto sample = hdg::load_sample(manifest, manifest.samples[i], c.hdg.components);
      features[i] = hdg::extract_hdg(sample, c.hdg);
    } catch (const hdg::Error& e) {
      errors[i] = e.what();
    }
  });

  std::vector<std::string> ids;
  std::vector<hdg::FeatureVector> rows;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i]) {
      ids.push_back(manifest.samples[i].sample_id);
      rows.push_back(std::move(*features[i]));
    } else {
      ++failed;
      spdlog::error("sample '{}': {}", manifest.samples[i].sample_id, errors[i]);
    }
  }
  if (!rows.empty()) {
    auto out = open_output(c, "features.csv");
    hdg::write_feature_csv(out, ids, rows);
  }
  std::cout << fmt::format("extracted {} of {} samples ({} columns)\n", rows.size(), n,
                           rows.empty() ? 0 : rows.front().values.size() + 1);
  return failed == 0 ? 0 : 1;
}

std::vector<hdg::SplitPlan> protocol_plans(const RunConfig& c, const hdg::DatasetManifest& manifest) {
  if (c.protocol == "half-subject") return hdg::half_subject_splits(manifest);
  if (c.protocol == "cross-view") {
    if (manifest.num_views < 3) {
      throw hdg::ValidationError(fmt::format(
          "protocol cross-view needs a dataset with >= 3 views; '{}' has {}", manifest.name, manifest.num_views));
    }
    return hdg::cross_view_splits(manifest);
  }
  if (c.protocol == "single-split") {
    if (!c.train_subjects.empty()) return {subject_plan(manifest, c.train_subjects)};
    return {hdg::validation_plan(manifest)};
  }
  throw hdg::ValidationError(
      fmt::format("unknown protocol '{}' (expected half-subject, cross-view or single-split)", c.protocol));
}

int cmd_eval(const RunConfig& c) {
  const auto manifest = require_dataset(c);
  c.hdg.validate();
  c.hp.validate();
  const auto plans = protocol_plans(c, manifest);
  prepare_out_dir(c);

  hdg::ComponentSet modalities = c.hdg.components;
  if (c.ablation) modalities = hdg::ComponentSet::all();
  const auto samples = hdg::load_samples(manifest, modalities, c.jobs);
  hdg::FeatureCache cache;
  const hdg::EvalOptions options{c.jobs, &cache};

  spdlog::info("evaluating {} plans ({})", plans.size(), c.protocol);
  const auto result = hdg::run_protocol(manifest, samples, c.hdg, c.hp, plans, options);
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    if (!o.report) continue;
    auto out = open_output(c, fmt::format("confusion_{:03}.csv", i));
    hdg::write_confusion_csv(out, o.report->confusion, manifest);
  }
  {
    auto out = open_output(c, "plans.csv");
    hdg::write_plan_summary_csv(out, result);
  }
  if (c.ablation) {
    const auto rows = hdg::ablation_study(manifest, samples, c.hdg, c.hp, plans, options);
    auto out = open_output(c, "ablation.csv");
    hdg::write_ablation_csv(out, rows);
    for (const auto& row : rows) {
      std::cout << fmt::format("ablation {} = {:.4f}\n", row.components.to_string(), row.mean_accuracy);
    }
  }
  std::cout << fmt::format("mean accuracy = {:.4f} over {} plans\n", result.mean_accuracy, result.evaluated);
  return result.evaluated > 0 ? 0 : 2;
}

int cmd_sweep(const RunConfig& c) {
  const auto manifest = require_dataset(c);
  c.hdg.validate();
  if (c.trees_grid.empty() || c.alpha_grid.empty()) throw hdg::ValidationError("sweep grids must not be empty");
  prepare_out_dir(c);
  const auto samples = hdg::load_samples(manifest, c.hdg.components, c.jobs);
  const auto plan = c.train_subjects.empty() ? hdg::validation_plan(manifest) : subject_plan(manifest, c.train_subjects);
  spdlog::info("sweeping {}x{} cells on plan '{}'", c.trees_grid.size(), c.alpha_grid.size(), plan.descriptor);
  const auto grid = hdg::hyperparameter_sweep(manifest, samples, c.hdg, c.trees_grid, c.alpha_grid, c.hp, plan,
                                              hdg::EvalOptions{c.jobs, nullptr});
  {
    auto out = open_output(c, "sweep.csv");
    hdg::write_sweep_csv(out, grid);
  }
  if (auto best = grid.best()) {
    std::cout << fmt::format("best: trees={} alpha={} accuracy={:.4f}\n", best->trees, hdg::format_real(best->alpha),
                             *best->accuracy);
    return 0;
  }
  std::cout << "best: none (every cell failed)\n";
  return 2;
}

int cmd_train(const RunConfig& c) {
  const auto manifest = require_dataset(c);
  c.hdg.validate();
  c.hp.validate();
  prepare_out_dir(c);
  const auto samples = hdg::load_samples(manifest, c.hdg.components, c.jobs);

  std::set<int> subjects(c.train_subjects.begin(), c.train_subjects.end());
  std::vector<const hdg::ActionSample*> train;
  for (const auto& s : samples) {
    if (subjects.empty() || subjects.count(s.subject_id + 1)) train.push_back(&s);
  }
  if (train.empty()) throw hdg::ValidationError("no training samples selected");

  std::vector<std::optional<hdg::FeatureVector>> features(train.size());
  hdg::parallel_for(train.size(), c.jobs, [&](std::size_t i) { features[i] = hdg::extract_hdg(*train[i], c.hdg); });
  hdg::FeatureMatrix x(train.size(), features.front()->values.size());
  std::vector<int> y(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) {
    std::copy(features[r]->values.begin(), features[r]->values.end(), x.row(r).begin());
    y[r] = train[r]->class_label;
  }
  hdg::Model model;
  model.config = c.hdg;
  model.num_joints = manifest.num_joints;
  model.reference_joint = manifest.reference_joint;
  for (int k = 0; k < manifest.num_classes; ++k) model.class_names.push_back(manifest.class_name(k));
  model.pipeline = hdg::train_pipeline(x, y, c.hp, manifest.num_classes, c.jobs);
  hdg::save_model(model, fs::path(c.out) / "model.json");
  std::cout << fmt::format("trained on {} samples, kept {} of {} features\n", train.size(),
                           model.pipeline.mask().kept.size(), model.pipeline.mask().full_dimension);
  return 0;
}

int cmd_predict(const RunConfig& c) {
  if (c.model.empty()) throw hdg::ValidationError("--model is required");
  const auto model = hdg::load_model(c.model);
  const auto manifest = require_dataset(c);
  const auto samples = hdg::load_samples(manifest, model.config.components, c.jobs);
  std::vector<hdg::Prediction> predictions(samples.size());
  hdg::parallel_for(samples.size(), c.jobs, [&](std::size_t i) {
    predictions[i] = model.pipeline.predict(hdg::extract_hdg(samples[i], model.config).values);
  });
  std::string text = "sample_id,true_label,predicted_label,confidence\n";
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& p = predictions[i];
    text += fmt::format("{},{},{},{}\n", samples[i].sample_id, samples[i].class_label, p.label,
                        hdg::format_real(p.votes[static_cast<std::size_t>(p.label)]));
    correct += p.label == samples[i].class_label ? 1 : 0;
  }
  std::cout << text;
  spdlog::info("{} of {} predictions match the manifest label", correct, samples.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"hdgkit: HDG depth/skeleton action recognition"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "JSON run config; flags override its values");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  app.add_option("--out", out, "Output directory");

  // Flags shared by the dataset-driven commands.
  std::optional<std::string> dataset, components, grid, hodg_bins, jmv_cells, train_subjects;
  std::optional<int> hod_bins, jpd_bins, pruning_trees, classifier_trees;
  std::optional<double> alpha;
  auto add_dataset = [&](CLI::App* cmd) { cmd->add_option("--dataset", dataset, "Manifest file or dataset directory"); };
  auto add_hdg = [&](CLI::App* cmd) {
    cmd->add_option("--components", components, "Feature families, e.g. hod,hodg,jpd,jmv or all");
    cmd->add_option("--grid", grid, "Subvolume grid x,y,t");
    cmd->add_option("--hod-bins", hod_bins, "Depth histogram bins");
    cmd->add_option("--hodg-bins", hodg_bins, "Derivative bins per channel x,y,t");
    cmd->add_option("--jpd-bins", jpd_bins, "Joint offset bins per axis");
    cmd->add_option("--jmv-cells", jmv_cells, "Joint movement cells x,y,t");
  };
  auto add_hp = [&](CLI::App* cmd, bool with_alpha) {
    cmd->add_option("--pruning-trees", pruning_trees, "Trees in the pruning forest");
    cmd->add_option("--classifier-trees", classifier_trees, "Trees in the classifier forest");
    if (with_alpha) cmd->add_option("--alpha", alpha, "Pruning threshold factor");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::optional<int> classes, subjects, views, reps, frames, height, width, joints;
  std::optional<double> noise, skeleton_noise;
  synth->add_option("--classes", classes);
  synth->add_option("--subjects", subjects);
  synth->add_option("--views", views);
  synth->add_option("--reps", reps);
  synth->add_option("--frames", frames);
  synth->add_option("--height", height);
  synth->add_option("--width", width);
  synth->add_option("--joints", joints);
  synth->add_option("--noise", noise, "Depth noise std-dev (mm)");
  synth->add_option("--skeleton-noise", skeleton_noise, "Joint noise std-dev (mm)");

  auto* extract = app.add_subcommand("extract", "Write HDG feature vectors to features.csv");
  add_dataset(extract);
  add_hdg(extract);

  auto* eval = app.add_subcommand("eval", "Run an evaluation protocol");
  std::optional<std::string> protocol;
  bool ablation = false;
  add_dataset(eval);
  add_hdg(eval);
  add_hp(eval, true);
  eval->add_option("--protocol", protocol, "half-subject, cross-view or single-split");
  eval->add_option("--train-subjects", train_subjects, "1-based training subjects for single-split");
  eval->add_flag("--ablation", ablation, "Also run the feature-combination ablation");

  auto* sweep = app.add_subcommand("sweep", "Grid search over pruning trees and alpha");
  std::optional<std::string> trees_list, alpha_list;
  add_dataset(sweep);
  add_hdg(sweep);
  sweep->add_option("--classifier-trees", classifier_trees, "Trees in the classifier forest");
  sweep->add_option("--trees", trees_list, "Comma-separated pruning forest sizes");
  sweep->add_option("--alpha", alpha_list, "Comma-separated threshold factors");
  sweep->add_option("--train-subjects", train_subjects, "1-based training subjects for the validation plan");

  auto* train = app.add_subcommand("train", "Train and persist a model");
  add_dataset(train);
  add_hdg(train);
  add_hp(train, true);
  train->add_option("--train-subjects", train_subjects, "1-based training subjects (default: all)");

  auto* predict = app.add_subcommand("predict", "Apply a persisted model");
  std::optional<std::string> model_path;
  add_dataset(predict);
  predict->add_option("--model", model_path, "model.json written by train")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunConfig c;
    if (!config_path.empty()) merge_config_file(config_path, c);
    c.command = app.get_subcommands().front()->get_name();
    if (seed) c.seed = *seed;
    if (jobs) c.jobs = *jobs;
    if (out) c.out = *out;
    if (dataset) c.dataset = *dataset;
    if (components) c.hdg.components = hdg::ComponentSet::parse(*components);
    if (grid) c.hdg.grid = parse_dims(*grid, "--grid");
    if (hod_bins) c.hdg.hod_bins = *hod_bins;
    if (hodg_bins) {
      auto b = parse_dims(*hodg_bins, "--hodg-bins");
      c.hdg.hodg_bins = {b.x, b.y, b.t};
    }
    if (jpd_bins) c.hdg.jpd_bins = *jpd_bins;
    if (jmv_cells) c.hdg.jmv_cells = parse_dims(*jmv_cells, "--jmv-cells");
    if (pruning_trees) c.hp.pruning_trees = *pruning_trees;
    if (classifier_trees) c.hp.classifier_trees = *classifier_trees;
    if (alpha) c.hp.alpha = *alpha;
    c.hp.rng_seed = c.seed;
    if (protocol) c.protocol = *protocol;
    if (ablation) c.ablation = true;
    if (train_subjects) c.train_subjects = parse_list<int>(*train_subjects, "--train-subjects");
    if (trees_list) c.trees_grid = parse_list<int>(*trees_list, "--trees");
    if (alpha_list) c.alpha_grid = parse_list<double>(*alpha_list, "--alpha");
    if (model_path) c.model = *model_path;
    if (classes) c.synth.num_classes = *classes;
    if (subjects) c.synth.num_subjects = *subjects;
    if (views) c.synth.num_views = *views;
    if (reps) c.synth.reps_per_cell = *reps;
    if (frames) c.synth.frames = *frames;
    if (height) c.synth.height = *height;
    if (width) c.synth.width = *width;
    if (joints) c.synth.num_joints = *joints;
    if (noise) c.synth.noise_level = *noise;
    if (skeleton_noise) c.synth.skeleton_noise = *skeleton_noise;

    if (c.command == "synth") return cmd_synth(c);
    if (c.command == "extract") return cmd_extract(c);
    if (c.command == "eval") return cmd_eval(c);
    if (c.command == "sweep") return cmd_sweep(c);
    if (c.command == "train") return cmd_train(c);
    if (c.command == "predict") return cmd_predict(c);
    return 1;
  } catch (const hdg::ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}
