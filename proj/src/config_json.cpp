#include "hdgkit/config_json.hpp"

#include <fmt/format.h>

#include "hdgkit/error.hpp"

namespace hdg {

namespace {

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("field '{}': {}", key, e.what()));
  }
}

}  // namespace

void to_json(nlohmann::json& j, const GridDims& g) { j = nlohmann::json::array({g.x, g.y, g.t}); }

void from_json(const nlohmann::json& j, GridDims& g) {
  if (!j.is_array() || j.size() != 3) throw ParseError("grid dimensions must be a 3-element array [x, y, t]");
  g = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

void to_json(nlohmann::json& j, const ChannelBins& b) { j = nlohmann::json::array({b.x, b.y, b.t}); }

void from_json(const nlohmann::json& j, ChannelBins& b) {
  if (!j.is_array() || j.size() != 3) throw ParseError("channel bins must be a 3-element array [x, y, t]");
  b = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

void to_json(nlohmann::json& j, const ComponentSet& c) {
  j = nlohmann::json::array();
  for (auto item : c.items()) j.push_back(std::string(component_name(item)));
}

void from_json(const nlohmann::json& j, ComponentSet& c) {
  if (j.is_string()) {
    c = ComponentSet::parse(j.get<std::string>());
    return;
  }
  if (!j.is_array()) throw ParseError("components must be a string or an array of names");
  ComponentSet out;
  for (const auto& item : j) {
    auto parsed = parse_component(item.get<std::string>());
    if (!parsed) throw ParseError(fmt::format("unknown feature component '{}'", item.get<std::string>()));
    out.insert(*parsed);
  }
  c = out;
}

void to_json(nlohmann::json& j, const HdgConfig& c) {
  j = nlohmann::json{{"grid", c.grid},           {"hod_bins", c.hod_bins}, {"hodg_bins", c.hodg_bins},
                     {"jpd_bins", c.jpd_bins},   {"jmv_cells", c.jmv_cells}, {"components", c.components}};
}

void from_json(const nlohmann::json& j, HdgConfig& c) {
  read_optional(j, "grid", c.grid);
  read_optional(j, "hod_bins", c.hod_bins);
  read_optional(j, "hodg_bins", c.hodg_bins);
  read_optional(j, "jpd_bins", c.jpd_bins);
  read_optional(j, "jmv_cells", c.jmv_cells);
  read_optional(j, "components", c.components);
}

void to_json(nlohmann::json& j, const HyperParams& h) {
  j = nlohmann::json{{"pruning_trees", h.pruning_trees},
                     {"classifier_trees", h.classifier_trees},
                     {"alpha", h.alpha},
                     {"rng_seed", h.rng_seed},
                     {"prune", h.prune}};
}

void from_json(const nlohmann::json& j, HyperParams& h) {
  read_optional(j, "pruning_trees", h.pruning_trees);
  read_optional(j, "classifier_trees", h.classifier_trees);
  read_optional(j, "alpha", h.alpha);
  read_optional(j, "rng_seed", h.rng_seed);
  read_optional(j, "prune", h.prune);
}

std::uint64_t config_hash(const HdgConfig& config) {
  const std::string text = nlohmann::json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hdg
