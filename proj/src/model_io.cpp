#include "hdgkit/model_io.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hdgkit/config_json.hpp"
#include "hdgkit/error.hpp"

namespace hdg {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "hdgkit-model";
constexpr int kVersion = 1;

json tree_to_json(const DecisionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       decrease = json::array(), counts = json::array();
  for (const auto& n : tree.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    decrease.push_back(n.impurity_decrease);
    counts.push_back(n.class_counts);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"decrease", decrease},   {"class_counts", counts}};
}

DecisionTree tree_from_json(const json& j, int num_classes) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto decrease = j.at("decrease").get<std::vector<double>>();
  const auto counts = j.at("class_counts").get<std::vector<std::vector<std::uint32_t>>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || decrease.size() != n || counts.size() != n) {
    throw ParseError("tree node arrays have different lengths");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {feature[i], threshold[i], left[i], right[i], decrease[i], counts[i]};
  }
  return DecisionTree(std::move(nodes), num_classes);
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const auto& p = model.pipeline;
  const auto& forest = p.classifier();
  json trees = json::array();
  for (const auto& t : forest.trees()) trees.push_back(tree_to_json(t));
  json doc{{"format", kFormat},
           {"version", kVersion},
           {"hdg_config", model.config},
           {"num_joints", model.num_joints},
           {"reference_joint", model.reference_joint},
           {"class_names", model.class_names},
           {"hyperparams", p.hyperparams()},
           {"mask",
            {{"kept", p.mask().kept},
             {"theta", p.mask().theta},
             {"alpha", p.mask().alpha},
             {"full_dimension", p.mask().full_dimension}}},
           {"forest",
            {{"num_classes", forest.num_classes()}, {"num_features", forest.num_features()}, {"trees", trees}}}};
  out << doc.dump() << '\n';
}

Model read_model(std::istream& in, const std::string& source) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
  try {
    if (doc.value("format", std::string{}) != kFormat) {
      throw ParseError(fmt::format("{}: not an hdgkit model file", source));
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw ParseError(fmt::format("{}: unsupported model version {}", source, doc.at("version").get<int>()));
    }
    Model model;
    model.config = doc.at("hdg_config").get<HdgConfig>();
    model.num_joints = doc.at("num_joints").get<int>();
    model.reference_joint = doc.at("reference_joint").get<int>();
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    const auto hp = doc.at("hyperparams").get<HyperParams>();

    const auto& m = doc.at("mask");
    FeatureMask mask;
    mask.kept = m.at("kept").get<std::vector<std::size_t>>();
    mask.theta = m.at("theta").get<double>();
    mask.alpha = m.at("alpha").get<double>();
    mask.full_dimension = m.at("full_dimension").get<std::size_t>();

    const auto& f = doc.at("forest");
    const int num_classes = f.at("num_classes").get<int>();
    std::vector<DecisionTree> trees;
    for (const auto& t : f.at("trees")) trees.push_back(tree_from_json(t, num_classes));
    Forest forest(std::move(trees), num_classes, f.at("num_features").get<std::size_t>());
    model.pipeline = Pipeline(hp, std::move(mask), std::move(forest));
    return model;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: malformed model: {}", source, e.what()));
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(fmt::format("{}: inconsistent model: {}", source, e.what()));
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write model '{}'", path.string()));
  write_model(out, model);
  if (!out) throw IoError(fmt::format("failed writing model '{}'", path.string()));
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open model '{}'", path.string()));
  return read_model(in, path.string());
}

}  // namespace hdg
