#include "hdgkit/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "hdgkit/error.hpp"

namespace hdg {

namespace {

int integer_bin(std::int64_t offset, std::int64_t range, int bins) {
  if (range <= 0) return 0;
  return static_cast<int>(std::min<std::int64_t>(offset * bins / range, bins - 1));
}

int real_bin(double v, double lo, double hi, int bins) {
  if (!(hi > lo)) return 0;
  const auto b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

SubvolumeGrid::SubvolumeGrid(GridDims cells, int width, int height, int frames)
    : cells_(cells), width_(width), height_(height), frames_(frames) {
  if (cells.x < 1 || cells.y < 1 || cells.t < 1) throw ValidationError("subvolume grid counts must be >= 1");
  if (width < 1 || height < 1 || frames < 1) throw ValidationError("subvolume grid extent must be >= 1");
}

std::vector<std::uint32_t> hod_counts(const DepthSequence& depth, const HdgConfig& config) {
  config.validate();
  const SubvolumeGrid grid(config.grid, depth.width(), depth.height(), depth.num_frames());
  const int bins = config.hod_bins;
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(grid.cell_count()) * bins, 0);

  int lo = std::numeric_limits<int>::max();
  int hi = std::numeric_limits<int>::min();
  for (int t = 0; t < depth.num_frames(); ++t) {
    for (int y = 0; y < depth.height(); ++y) {
      for (int x = 0; x < depth.width(); ++x) {
        if (!depth.is_foreground(t, y, x)) continue;
        const int v = depth.at(t, y, x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (lo > hi) return counts;  // no foreground

  for (int t = 0; t < depth.num_frames(); ++t) {
    const int ct = grid.cell_t(t);
    for (int y = 0; y < depth.height(); ++y) {
      const int cy = grid.cell_y(y);
      for (int x = 0; x < depth.width(); ++x) {
        if (!depth.is_foreground(t, y, x)) continue;
        const int bin = integer_bin(depth.at(t, y, x) - lo, hi - lo, bins);
        const auto cell = static_cast<std::size_t>(grid.cell_index(grid.cell_x(x), cy, ct));
        ++counts[cell * bins + bin];
      }
    }
  }
  return counts;
}

std::int32_t doubled_derivative(const DepthSequence& depth, int t, int y, int x, int axis) {
  int pos[3] = {x, y, t};
  const int extent[3] = {depth.width(), depth.height(), depth.num_frames()};
  auto foreground_at = [&](int offset) {
    int p[3] = {pos[0], pos[1], pos[2]};
    p[axis] += offset;
    if (p[axis] < 0 || p[axis] >= extent[axis]) return false;
    return depth.is_foreground(p[2], p[1], p[0]);
  };
  auto value_at = [&](int offset) {
    int p[3] = {pos[0], pos[1], pos[2]};
    p[axis] += offset;
    return static_cast<std::int32_t>(depth.at(p[2], p[1], p[0]));
  };
  const bool prev = foreground_at(-1);
  const bool next = foreground_at(+1);
  if (prev && next) return value_at(+1) - value_at(-1);
  if (next) return 2 * (value_at(+1) - value_at(0));
  if (prev) return 2 * (value_at(0) - value_at(-1));
  return 0;
}

std::vector<std::uint32_t> hodg_counts(const DepthSequence& depth, const HdgConfig& config) {
  config.validate();
  const SubvolumeGrid grid(config.grid, depth.width(), depth.height(), depth.num_frames());
  const int channel_bins[3] = {config.hodg_bins.x, config.hodg_bins.y, config.hodg_bins.t};
  const int channel_offset[3] = {0, channel_bins[0], channel_bins[0] + channel_bins[1]};
  const int per_cell = config.hodg_bins.total();
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(grid.cell_count()) * per_cell, 0);

  // A single frame carries no temporal information: that channel stays empty.
  const int channels = depth.num_frames() >= 2 ? 3 : 2;

  struct Sample {
    int cell;
    std::int32_t d[3];
  };
  std::vector<Sample> samples;
  std::int32_t lo[3] = {std::numeric_limits<std::int32_t>::max(), std::numeric_limits<std::int32_t>::max(),
                        std::numeric_limits<std::int32_t>::max()};
  std::int32_t hi[3] = {std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::min(),
                        std::numeric_limits<std::int32_t>::min()};
  for (int t = 0; t < depth.num_frames(); ++t) {
    for (int y = 0; y < depth.height(); ++y) {
      for (int x = 0; x < depth.width(); ++x) {
        if (!depth.is_foreground(t, y, x)) continue;
        Sample s{grid.cell_of(x, y, t), {0, 0, 0}};
        for (int c = 0; c < channels; ++c) {
          s.d[c] = doubled_derivative(depth, t, y, x, c);
          lo[c] = std::min(lo[c], s.d[c]);
          hi[c] = std::max(hi[c], s.d[c]);
        }
        samples.push_back(s);
      }
    }
  }
  for (const auto& s : samples) {
    const auto base = static_cast<std::size_t>(s.cell) * per_cell;
    for (int c = 0; c < channels; ++c) {
      const int bin = integer_bin(static_cast<std::int64_t>(s.d[c]) - lo[c],
                                  static_cast<std::int64_t>(hi[c]) - lo[c], channel_bins[c]);
      ++counts[base + channel_offset[c] + bin];
    }
  }
  return counts;
}

std::vector<std::uint32_t> jpd_counts(const SkeletonSequence& skeleton, const HdgConfig& config) {
  config.validate();
  if (skeleton.num_joints() < 2) {
    throw ValidationError("jpd needs at least 2 joints (a reference and one other)");
  }
  const int bins = config.jpd_bins;
  const int ref = skeleton.reference_joint();

  std::vector<double> offsets[3];
  for (int t = 0; t < skeleton.num_frames(); ++t) {
    const Joint& r = skeleton.at(t, ref);
    for (int j = 0; j < skeleton.num_joints(); ++j) {
      if (j == ref) continue;
      const Joint& p = skeleton.at(t, j);
      offsets[0].push_back(p.x - r.x);
      offsets[1].push_back(p.y - r.y);
      offsets[2].push_back(p.z - r.z);
    }
  }
  std::vector<std::uint32_t> counts(3 * static_cast<std::size_t>(bins), 0);
  for (int c = 0; c < 3; ++c) {
    const auto [lo, hi] = std::minmax_element(offsets[c].begin(), offsets[c].end());
    for (double v : offsets[c]) {
      ++counts[static_cast<std::size_t>(c) * bins + real_bin(v, *lo, *hi, bins)];
    }
  }
  return counts;
}

std::vector<double> normalize_histograms(std::span<const std::uint32_t> counts, std::span<const int> pattern) {
  if (pattern.empty()) throw ValidationError("histogram pattern must not be empty");
  std::vector<double> out(counts.size(), 0.0);
  std::size_t pos = 0;
  std::size_t k = 0;
  while (pos < counts.size()) {
    const auto n = static_cast<std::size_t>(pattern[k % pattern.size()]);
    if (n == 0 || pos + n > counts.size()) throw ValidationError("histogram pattern does not tile the counts");
    std::uint64_t total = 0;
    for (std::size_t i = pos; i < pos + n; ++i) total += counts[i];
    if (total > 0) {
      for (std::size_t i = pos; i < pos + n; ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    }
    pos += n;
    ++k;
  }
  return out;
}

std::vector<double> compute_hod(const DepthSequence& depth, const HdgConfig& config) {
  const int pattern[] = {config.hod_bins};
  return normalize_histograms(hod_counts(depth, config), pattern);
}

std::vector<double> compute_hodg(const DepthSequence& depth, const HdgConfig& config) {
  const int pattern[] = {config.hodg_bins.x, config.hodg_bins.y, config.hodg_bins.t};
  return normalize_histograms(hodg_counts(depth, config), pattern);
}

std::vector<double> compute_jpd(const SkeletonSequence& skeleton, const HdgConfig& config) {
  const int pattern[] = {config.jpd_bins};
  return normalize_histograms(jpd_counts(skeleton, config), pattern);
}

std::vector<double> compute_jmv(const SkeletonSequence& skeleton, const HdgConfig& config) {
  config.validate();
  const GridDims cells = config.jmv_cells;
  const int frames = skeleton.num_frames();
  const int ref = skeleton.reference_joint();
  const auto per_joint = static_cast<std::size_t>(cells.cells()) * kJmvValuesPerCell;
  std::vector<double> out(per_joint * skeleton.num_joints(), 0.0);

  struct Cell {
    int count = 0;
    double min[3] = {0, 0, 0};
    double max[3] = {0, 0, 0};
    double ref_sum[2] = {0, 0};
  };

  for (int j = 0; j < skeleton.num_joints(); ++j) {
    // Spatial cells split the joint's own x/y extent over the whole clip.
    double x_lo = skeleton.at(0, j).x, x_hi = x_lo;
    double y_lo = skeleton.at(0, j).y, y_hi = y_lo;
    for (int t = 1; t < frames; ++t) {
      const Joint& p = skeleton.at(t, j);
      x_lo = std::min(x_lo, p.x);
      x_hi = std::max(x_hi, p.x);
      y_lo = std::min(y_lo, p.y);
      y_hi = std::max(y_hi, p.y);
    }

    std::vector<Cell> acc(static_cast<std::size_t>(cells.cells()));
    for (int t = 0; t < frames; ++t) {
      const Joint& p = skeleton.at(t, j);
      const Joint& r = skeleton.at(t, ref);
      const int cx = real_bin(p.x, x_lo, x_hi, cells.x);
      const int cy = real_bin(p.y, y_lo, y_hi, cells.y);
      const int ct = static_cast<int>(static_cast<long long>(t) * cells.t / frames);
      Cell& c = acc[static_cast<std::size_t>((cx * cells.y + cy) * cells.t + ct)];
      const double pos[3] = {p.x, p.y, p.z};
      for (int a = 0; a < 3; ++a) {
        c.min[a] = c.count == 0 ? pos[a] : std::min(c.min[a], pos[a]);
        c.max[a] = c.count == 0 ? pos[a] : std::max(c.max[a], pos[a]);
      }
      c.ref_sum[0] += r.x;
      c.ref_sum[1] += r.y;
      ++c.count;
    }

    double* dst = out.data() + per_joint * j;
    for (const Cell& c : acc) {
      if (c.count > 0) {
        const double rx = c.ref_sum[0] / c.count;
        const double ry = c.ref_sum[1] / c.count;
        dst[0] = (c.max[0] - c.min[0]) * (c.max[1] - c.min[1]) * (c.max[2] - c.min[2]);
        dst[1] = c.min[0] - rx;
        dst[2] = c.max[0] - rx;
        dst[3] = c.min[1] - ry;
        dst[4] = c.max[1] - ry;
        dst[5] = c.max[2] - c.min[2];
      }
      dst += kJmvValuesPerCell;
    }
  }
  return out;
}

FeatureVector extract_hdg(const ActionSample& sample, const HdgConfig& config) {
  config.validate();
  check_sample_consistency(sample);
  for (auto c : config.components.items()) {
    const bool depth_family = c == Component::hod || c == Component::hodg;
    if (depth_family && !sample.depth) {
      throw ValidationError(fmt::format("sample '{}': component {} requires a depth sequence", sample.sample_id,
                                        component_name(c)));
    }
    if (!depth_family && !sample.skeleton) {
      throw ValidationError(fmt::format("sample '{}': component {} requires a skeleton sequence",
                                        sample.sample_id, component_name(c)));
    }
  }

  const int joints = sample.skeleton ? sample.skeleton->num_joints() : 1;
  FeatureLayout layout = layout_from_config(config, joints);
  std::vector<double> values;
  values.reserve(layout.total_length());
  for (auto c : config.components.items()) {
    std::vector<double> part;
    switch (c) {
      case Component::hod: part = compute_hod(*sample.depth, config); break;
      case Component::hodg: part = compute_hodg(*sample.depth, config); break;
      case Component::jpd: part = compute_jpd(*sample.skeleton, config); break;
      case Component::jmv: part = compute_jmv(*sample.skeleton, config); break;
    }
    values.insert(values.end(), part.begin(), part.end());
  }
  return FeatureVector(std::move(values), std::move(layout));
}

void write_feature_csv(std::ostream& out, std::span<const std::string> sample_ids,
                       std::span<const FeatureVector> features) {
  if (sample_ids.size() != features.size()) throw ValidationError("feature CSV: id/row count mismatch");
  if (features.empty()) throw ValidationError("feature CSV: no rows");
  const FeatureLayout& layout = features.front().layout;
  std::string line = "sample_id";
  for (std::size_t i = 0; i < layout.total_length(); ++i) {
    line.push_back(',');
    line += layout.column_name(i);
  }
  out << line << '\n';
  char buf[32];
  for (std::size_t r = 0; r < features.size(); ++r) {
    if (!(features[r].layout == layout)) throw ValidationError("feature CSV: rows have different layouts");
    line = sample_ids[r];
    for (double v : features[r].values) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      line.push_back(',');
      line.append(buf, ptr);
    }
    out << line << '\n';
  }
}

}  // namespace hdg
