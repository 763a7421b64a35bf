#pragma once

// Domain types shared by every hdgkit module. No I/O and no learning logic.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hdg {

/// The four HDG feature families, in canonical concatenation order.
enum class Component : std::uint8_t { hod = 0, hodg = 1, jpd = 2, jmv = 3 };

inline constexpr std::array<Component, 4> kAllComponents{Component::hod, Component::hodg,
                                                         Component::jpd, Component::jmv};

std::string_view component_name(Component c);
std::optional<Component> parse_component(std::string_view name);

/// Small bitset over Component. Iteration is always in canonical order.
class ComponentSet {
 public:
  constexpr ComponentSet() = default;
  ComponentSet(std::initializer_list<Component> items) {
    for (auto c : items) insert(c);
  }

  static ComponentSet all() { return {Component::hod, Component::hodg, Component::jpd, Component::jmv}; }

  /// Parses a comma-separated list such as "hod,jpd". Throws ValidationError.
  static ComponentSet parse(std::string_view list);

  void insert(Component c) { bits_ |= bit(c); }
  bool contains(Component c) const { return (bits_ & bit(c)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  bool needs_depth() const { return contains(Component::hod) || contains(Component::hodg); }
  bool needs_skeleton() const { return contains(Component::jpd) || contains(Component::jmv); }

  std::vector<Component> items() const;
  /// "hod+hodg" style label; "all" is never abbreviated.
  std::string to_string(char sep = '+') const;

  friend bool operator==(ComponentSet, ComponentSet) = default;

 private:
  static constexpr std::uint8_t bit(Component c) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c)); }
  std::uint8_t bits_ = 0;
};

/// T x H x W depth clip in millimetres; 0 marks invalid/background.
class DepthSequence {
 public:
  DepthSequence(int num_frames, int height, int width, std::vector<std::uint16_t> values,
                std::vector<std::uint8_t> mask = {});

  int num_frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t voxel_count() const noexcept { return values_.size(); }

  std::size_t index(int t, int y, int x) const noexcept {
    return (static_cast<std::size_t>(t) * height_ + y) * width_ + x;
  }
  std::uint16_t at(int t, int y, int x) const noexcept { return values_[index(t, y, x)]; }

  /// Depth > 0 and, when a mask is present, marked foreground.
  bool is_foreground(int t, int y, int x) const noexcept {
    const auto i = index(t, y, x);
    return values_[i] != 0 && (mask_.empty() || mask_[i] != 0);
  }

  std::span<const std::uint16_t> values() const noexcept { return values_; }
  bool has_mask() const noexcept { return !mask_.empty(); }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

  friend bool operator==(const DepthSequence&, const DepthSequence&) = default;

 private:
  int frames_;
  int height_;
  int width_;
  std::vector<std::uint16_t> values_;
  std::vector<std::uint8_t> mask_;
};

struct Joint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double confidence = 1.0;

  friend bool operator==(const Joint&, const Joint&) = default;
};

/// Per-frame 3D joint positions. Low-confidence joints are kept as-is.
class SkeletonSequence {
 public:
  SkeletonSequence(int num_frames, int num_joints, std::vector<Joint> joints, int reference_joint = 0);

  int num_frames() const noexcept { return frames_; }
  int num_joints() const noexcept { return joints_per_frame_; }
  int reference_joint() const noexcept { return reference_; }

  const Joint& at(int t, int j) const noexcept {
    return joints_[static_cast<std::size_t>(t) * joints_per_frame_ + j];
  }
  std::span<const Joint> joints() const noexcept { return joints_; }

  friend bool operator==(const SkeletonSequence&, const SkeletonSequence&) = default;

 private:
  int frames_;
  int joints_per_frame_;
  int reference_;
  std::vector<Joint> joints_;
};

/// One labelled action clip. Either modality may be absent when it is not needed.
struct ActionSample {
  std::string sample_id;
  int class_label = 0;
  int subject_id = 0;
  int view_id = 0;
  std::optional<DepthSequence> depth;
  std::optional<SkeletonSequence> skeleton;
};

/// Throws ValidationError when depth and skeleton disagree on the frame count.
void check_sample_consistency(const ActionSample& sample);

struct Segment {
  Component component;
  std::size_t offset = 0;
  std::size_t length = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Named, contiguous segments of a global feature vector.
class FeatureLayout {
 public:
  FeatureLayout() = default;
  explicit FeatureLayout(std::vector<Segment> segments);

  std::span<const Segment> segments() const noexcept { return segments_; }
  std::size_t total_length() const noexcept;
  std::optional<Segment> find(Component c) const;
  /// Column label such as "hodg:17" for a global index.
  std::string column_name(std::size_t index) const;

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;

 private:
  std::vector<Segment> segments_;
};

struct FeatureVector {
  FeatureVector(std::vector<double> values, FeatureLayout layout);

  std::span<const double> segment(Component c) const;

  std::vector<double> values;
  FeatureLayout layout;
};

struct GridDims {
  int x = 1;
  int y = 1;
  int t = 1;

  int cells() const noexcept { return x * y * t; }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct ChannelBins {
  int x = 7;
  int y = 7;
  int t = 6;

  int total() const noexcept { return x + y + t; }
  friend bool operator==(const ChannelBins&, const ChannelBins&) = default;
};

/// Extraction settings. Defaults reproduce the 13250-long layout for 20 joints.
struct HdgConfig {
  GridDims grid{10, 10, 5};
  int hod_bins = 5;
  ChannelBins hodg_bins{7, 7, 6};
  int jpd_bins = 50;
  GridDims jmv_cells{1, 1, 5};
  ComponentSet components = ComponentSet::all();

  /// Preset whose hodg bins (7, 7, 6) give 20 bins per subvolume.
  static HdgConfig msr_compat() { return HdgConfig{}; }

  void validate() const;

  friend bool operator==(const HdgConfig&, const HdgConfig&) = default;
};

/// Values stored per jmv cell: volume, x_min, x_max, y_min, y_max, z_range.
inline constexpr int kJmvValuesPerCell = 6;

struct HyperParams {
  int pruning_trees = 130;
  int classifier_trees = 128;
  double alpha = 3.5;  // threshold factor for pruning
  std::uint64_t rng_seed = 0;
  bool prune = true;   // false trains the classifier on every feature

  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

FeatureLayout layout_from_config(const HdgConfig& config, int num_joints);

/// Mixes a base seed with stream identifiers (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace hdg
