#pragma once

// Dataset ingestion: manifest files, DEPB depth files, skeleton text files and
// the synthetic dataset generator used for desk-scale runs.
//
// DEPB layout (all integers little-endian):
//   "DEPB" | u32 T | u32 H | u32 W | u32 reserved (0) | T*H*W u16 depth values
// Values are frame-major and row-major within a frame.
//
// Skeleton text: one "x y z confidence" line per joint per frame, frames in
// order and joints in order within a frame. Blank lines are ignored.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdgkit/core.hpp"

namespace hdg {

struct ManifestEntry {
  std::string sample_id;
  int class_label = 0;
  int subject_id = 0;
  int view_id = 0;
  std::string depth_path;     // relative to the manifest directory; empty = no depth
  std::string skeleton_path;  // relative to the manifest directory; empty = no skeleton

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string name;
  int num_classes = 0;
  int num_subjects = 0;
  int num_views = 1;
  int num_joints = 20;
  int reference_joint = 0;
  std::vector<std::string> class_names;  // optional; empty means "class_<i>"
  std::vector<ManifestEntry> samples;
  std::filesystem::path base_dir;        // directory the relative paths resolve against

  /// Unique ids, labels within declared ranges, every class represented.
  void validate() const;
  std::string class_name(int label) const;
  const ManifestEntry* find(const std::string& sample_id) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

DepthSequence read_depth_sequence(std::istream& in, const std::string& source = "<stream>");
void write_depth_sequence(std::ostream& out, const DepthSequence& depth);
DepthSequence load_depth_sequence(const std::filesystem::path& path);
void save_depth_sequence(const DepthSequence& depth, const std::filesystem::path& path);

/// Confidence values are clamped to [0, 1]; nothing else is repaired.
SkeletonSequence read_skeleton(std::istream& in, int num_joints, int reference_joint = 0,
                               const std::string& source = "<stream>");
void write_skeleton(std::ostream& out, const SkeletonSequence& skeleton);
SkeletonSequence load_skeleton(const std::filesystem::path& path, int num_joints, int reference_joint = 0);
void save_skeleton(const SkeletonSequence& skeleton, const std::filesystem::path& path);

/// Loads the modalities required by `components` for one manifest entry.
ActionSample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry, ComponentSet components);
std::vector<ActionSample> load_samples(const DatasetManifest& manifest, ComponentSet components, int jobs = 1);

struct SynthSpec {
  int num_classes = 6;
  int num_subjects = 8;
  int num_views = 1;
  int reps_per_cell = 1;
  int height = 48;
  int width = 64;
  int frames = 20;
  int num_joints = 20;
  double noise_level = 5.0;     // std-dev of depth noise (mm)
  double skeleton_noise = 0.0;  // std-dev of joint position noise (mm)
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<ActionSample> samples;  // same order as manifest.samples
};

/// Fixed per-view camera motion: rotation about a pivot in camera space.
struct ViewTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> pivot{0, 0, 0};

  Joint apply(const Joint& j) const;
  Joint inverse(const Joint& j) const;
};

ViewTransform view_transform(int view_id);

/// Deterministic in spec.rng_seed. Sample count = classes * subjects * views * reps.
SyntheticDataset generate_synthetic(const SynthSpec& spec);

/// Writes manifest.json plus depth/*.depb and skeleton/*.txt under `dir`.
/// Returns the manifest as written (paths filled in, base_dir = dir).
DatasetManifest write_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir);

}  // namespace hdg
