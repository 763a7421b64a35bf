#include "hdgkit/core.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hdgkit/error.hpp"

namespace hdg {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::hod: return "hod";
    case Component::hodg: return "hodg";
    case Component::jpd: return "jpd";
    case Component::jmv: return "jmv";
  }
  return "?";
}

std::optional<Component> parse_component(std::string_view name) {
  for (auto c : kAllComponents) {
    if (component_name(c) == name) return c;
  }
  return std::nullopt;
}

ComponentSet ComponentSet::parse(std::string_view list) {
  if (list == "all") return all();
  ComponentSet out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto end = list.find_first_of(",+", start);
    if (end == std::string_view::npos) end = list.size();
    auto token = list.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      auto c = parse_component(token);
      if (!c) throw ValidationError(fmt::format("unknown feature component '{}'", token));
      out.insert(*c);
    }
    start = end + 1;
  }
  if (out.empty()) throw ValidationError("component list is empty");
  return out;
}

std::size_t ComponentSet::size() const {
  std::size_t n = 0;
  for (auto c : kAllComponents) n += contains(c) ? 1 : 0;
  return n;
}

std::vector<Component> ComponentSet::items() const {
  std::vector<Component> out;
  for (auto c : kAllComponents) {
    if (contains(c)) out.push_back(c);
  }
  return out;
}

std::string ComponentSet::to_string(char sep) const {
  std::string out;
  for (auto c : items()) {
    if (!out.empty()) out.push_back(sep);
    out += component_name(c);
  }
  return out;
}

DepthSequence::DepthSequence(int num_frames, int height, int width, std::vector<std::uint16_t> values,
                             std::vector<std::uint8_t> mask)
    : frames_(num_frames), height_(height), width_(width), values_(std::move(values)), mask_(std::move(mask)) {
  if (frames_ < 1 || height_ < 1 || width_ < 1) {
    throw ValidationError(fmt::format("depth sequence dimensions must be >= 1 (got T={}, H={}, W={})", frames_,
                                      height_, width_));
  }
  const auto expected = static_cast<std::size_t>(frames_) * height_ * width_;
  if (values_.size() != expected) {
    throw ValidationError(fmt::format("depth sequence holds {} values, expected T*H*W = {}", values_.size(), expected));
  }
  if (!mask_.empty() && mask_.size() != expected) {
    throw ValidationError(fmt::format("depth mask holds {} entries, expected {}", mask_.size(), expected));
  }
}

SkeletonSequence::SkeletonSequence(int num_frames, int num_joints, std::vector<Joint> joints, int reference_joint)
    : frames_(num_frames), joints_per_frame_(num_joints), reference_(reference_joint), joints_(std::move(joints)) {
  if (frames_ < 1 || joints_per_frame_ < 1) {
    throw ValidationError(
        fmt::format("skeleton needs >= 1 frame and >= 1 joint (got T={}, J={})", frames_, joints_per_frame_));
  }
  if (joints_.size() != static_cast<std::size_t>(frames_) * joints_per_frame_) {
    throw ValidationError(fmt::format("skeleton holds {} joints, expected T*J = {}", joints_.size(),
                                      static_cast<std::size_t>(frames_) * joints_per_frame_));
  }
  if (reference_ < 0 || reference_ >= joints_per_frame_) {
    throw ValidationError(fmt::format("reference joint {} outside [0, {})", reference_, joints_per_frame_));
  }
  for (const auto& j : joints_) {
    if (!std::isfinite(j.x) || !std::isfinite(j.y) || !std::isfinite(j.z) || !std::isfinite(j.confidence)) {
      throw ValidationError("skeleton contains a non-finite coordinate");
    }
  }
}

void check_sample_consistency(const ActionSample& sample) {
  if (sample.depth && sample.skeleton && sample.depth->num_frames() != sample.skeleton->num_frames()) {
    throw ValidationError(fmt::format("sample '{}': depth has {} frames but skeleton has {}", sample.sample_id,
                                      sample.depth->num_frames(), sample.skeleton->num_frames()));
  }
}

FeatureLayout::FeatureLayout(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw ValidationError("feature layout needs at least one segment");
  std::size_t offset = 0;
  for (const auto& s : segments_) {
    if (s.offset != offset) throw ValidationError("feature layout segments must be contiguous");
    offset += s.length;
  }
}

std::size_t FeatureLayout::total_length() const noexcept {
  return std::accumulate(segments_.begin(), segments_.end(), std::size_t{0},
                         [](std::size_t acc, const Segment& s) { return acc + s.length; });
}

std::optional<Segment> FeatureLayout::find(Component c) const {
  for (const auto& s : segments_) {
    if (s.component == c) return s;
  }
  return std::nullopt;
}

std::string FeatureLayout::column_name(std::size_t index) const {
  for (const auto& s : segments_) {
    if (index >= s.offset && index < s.offset + s.length) {
      return fmt::format("{}:{}", component_name(s.component), index - s.offset);
    }
  }
  throw ValidationError(fmt::format("column {} outside feature layout", index));
}

FeatureVector::FeatureVector(std::vector<double> v, FeatureLayout l) : values(std::move(v)), layout(std::move(l)) {
  if (values.size() != layout.total_length()) {
    throw ValidationError(
        fmt::format("feature vector has {} values but layout expects {}", values.size(), layout.total_length()));
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw ValidationError("feature vector contains a non-finite value");
  }
}

std::span<const double> FeatureVector::segment(Component c) const {
  auto s = layout.find(c);
  if (!s) throw ValidationError(fmt::format("feature vector has no '{}' segment", component_name(c)));
  return std::span<const double>(values).subspan(s->offset, s->length);
}

void HdgConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw ValidationError(fmt::format("{} must be >= 1 (got {})", what, v));
  };
  positive(grid.x, "grid.x");
  positive(grid.y, "grid.y");
  positive(grid.t, "grid.t");
  positive(hod_bins, "hod_bins");
  positive(hodg_bins.x, "hodg_bins.x");
  positive(hodg_bins.y, "hodg_bins.y");
  positive(hodg_bins.t, "hodg_bins.t");
  positive(jpd_bins, "jpd_bins");
  positive(jmv_cells.x, "jmv_cells.x");
  positive(jmv_cells.y, "jmv_cells.y");
  positive(jmv_cells.t, "jmv_cells.t");
  if (components.empty()) throw ValidationError("at least one feature component must be enabled");
}

void HyperParams::validate() const {
  if (pruning_trees < 1) throw ValidationError(fmt::format("pruning_trees must be >= 1 (got {})", pruning_trees));
  if (classifier_trees < 1) {
    throw ValidationError(fmt::format("classifier_trees must be >= 1 (got {})", classifier_trees));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError(fmt::format("alpha must be a finite value >= 0 (got {})", alpha));
  }
}

FeatureLayout layout_from_config(const HdgConfig& config, int num_joints) {
  config.validate();
  if (num_joints < 1) throw ValidationError(fmt::format("num_joints must be >= 1 (got {})", num_joints));

  const auto cells = static_cast<std::size_t>(config.grid.cells());
  std::vector<Segment> segments;
  std::size_t offset = 0;
  for (auto c : config.components.items()) {
    std::size_t length = 0;
    switch (c) {
      case Component::hod: length = cells * config.hod_bins; break;
      case Component::hodg: length = cells * config.hodg_bins.total(); break;
      case Component::jpd: length = 3 * static_cast<std::size_t>(config.jpd_bins); break;
      case Component::jmv:
        length = static_cast<std::size_t>(num_joints) * kJmvValuesPerCell * config.jmv_cells.cells();
        break;
    }
    segments.push_back({c, offset, length});
    offset += length;
  }
  return FeatureLayout(std::move(segments));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace hdg
