#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdgkit/core.hpp"
#include "hdgkit/forest.hpp"

namespace hdg {

/// Everything needed to classify a raw sample: extraction settings, the
/// feature mask and the classifier forest.
struct Model {
  HdgConfig config;
  int num_joints = 20;
  int reference_joint = 0;
  std::vector<std::string> class_names;
  Pipeline pipeline;
};

/// JSON document tagged "format": "hdgkit-model". Doubles are written in
/// shortest round-trip form, so a reloaded model predicts bit-identically.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in, const std::string& source = "<stream>");
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace hdg
