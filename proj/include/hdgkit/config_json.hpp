#pragma once

// JSON mappings for configuration types (run configs, model files, manifests).

#include <json.hpp>

#include "hdgkit/core.hpp"

namespace hdg {

void to_json(nlohmann::json& j, const GridDims& g);
void from_json(const nlohmann::json& j, GridDims& g);
void to_json(nlohmann::json& j, const ChannelBins& b);
void from_json(const nlohmann::json& j, ChannelBins& b);
void to_json(nlohmann::json& j, const ComponentSet& c);
void from_json(const nlohmann::json& j, ComponentSet& c);

// Missing keys keep their defaults, so partial config files are accepted.
void to_json(nlohmann::json& j, const HdgConfig& c);
void from_json(const nlohmann::json& j, HdgConfig& c);
void to_json(nlohmann::json& j, const HyperParams& h);
void from_json(const nlohmann::json& j, HyperParams& h);

/// Stable 64-bit FNV-1a hash of the config's JSON form. Used as a cache key.
std::uint64_t config_hash(const HdgConfig& config);

}  // namespace hdg
