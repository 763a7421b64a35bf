#pragma once

// HDG feature families:
//   hod  - per-subvolume histograms of foreground depth
//   hodg - per-subvolume histograms of depth derivatives along x, y and t
//   jpd  - histograms of joint offsets from the reference joint, one per axis
//   jmv  - per-joint movement volume and extreme positions over temporal cells
//
// Histogram binning is shared by all families: with range [lo, hi] and n bins
// a value v goes to floor((v - lo) / (hi - lo) * n), the max edge falls in the
// last bin, and a degenerate range (lo == hi) sends everything to bin 0.
// Integer-valued inputs (depth, doubled derivatives) use the exact integer form
// (v - lo) * n / (hi - lo).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hdgkit/core.hpp"

namespace hdg {

/// Even partition of a W x H x T volume into nx x ny x nt cells. Voxel
/// coordinate i on an axis of extent n with k cells falls in cell i * k / n.
class SubvolumeGrid {
 public:
  SubvolumeGrid(GridDims cells, int width, int height, int frames);

  int cell_x(int x) const noexcept { return static_cast<int>(static_cast<long long>(x) * cells_.x / width_); }
  int cell_y(int y) const noexcept { return static_cast<int>(static_cast<long long>(y) * cells_.y / height_); }
  int cell_t(int t) const noexcept { return static_cast<int>(static_cast<long long>(t) * cells_.t / frames_); }

  /// x-major cell order: ((cx * ny) + cy) * nt + ct.
  int cell_index(int cx, int cy, int ct) const noexcept { return (cx * cells_.y + cy) * cells_.t + ct; }
  int cell_of(int x, int y, int t) const noexcept { return cell_index(cell_x(x), cell_y(y), cell_t(t)); }
  int cell_count() const noexcept { return cells_.cells(); }
  GridDims dims() const noexcept { return cells_; }

 private:
  GridDims cells_;
  int width_;
  int height_;
  int frames_;
};

/// Raw (pre-normalisation) counts, same layout as the corresponding segment.
std::vector<std::uint32_t> hod_counts(const DepthSequence& depth, const HdgConfig& config);
std::vector<std::uint32_t> hodg_counts(const DepthSequence& depth, const HdgConfig& config);
std::vector<std::uint32_t> jpd_counts(const SkeletonSequence& skeleton, const HdgConfig& config);

/// Twice the depth derivative at a foreground voxel along axis 0 (x), 1 (y) or
/// 2 (t). Central difference when both neighbours are foreground, one-sided
/// when only one is, zero when neither is.
std::int32_t doubled_derivative(const DepthSequence& depth, int t, int y, int x, int axis);

/// L1-normalises consecutive histograms whose sizes cycle through `pattern`.
/// Empty histograms stay all-zero.
std::vector<double> normalize_histograms(std::span<const std::uint32_t> counts, std::span<const int> pattern);

std::vector<double> compute_hod(const DepthSequence& depth, const HdgConfig& config);
std::vector<double> compute_hodg(const DepthSequence& depth, const HdgConfig& config);
std::vector<double> compute_jpd(const SkeletonSequence& skeleton, const HdgConfig& config);
std::vector<double> compute_jmv(const SkeletonSequence& skeleton, const HdgConfig& config);

/// Concatenates the enabled families in canonical order.
FeatureVector extract_hdg(const ActionSample& sample, const HdgConfig& config);

/// Header "sample_id,<segment>:<index>,..." then one row per sample.
void write_feature_csv(std::ostream& out, std::span<const std::string> sample_ids,
                       std::span<const FeatureVector> features);

}  // namespace hdg
