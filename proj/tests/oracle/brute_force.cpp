#include "brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

// First voxel of cell c when n voxels are split evenly into k cells
// (voxel i belongs to cell floor(i*k/n)).
int cell_begin(int c, int n, int k) { return (c * n + k - 1) / k; }

// Largest b in [0, bins) with b*range <= offset*bins; 0 for an empty range.
int scan_bin_int(long long offset, long long range, int bins) {
  if (range == 0) return 0;
  int found = 0;
  for (int b = 0; b < bins; ++b) {
    if (static_cast<long long>(b) * range <= offset * bins) found = b;
  }
  return found;
}

int scan_bin_real(double v, double lo, double hi, int bins) {
  if (lo == hi) return 0;
  const double scaled = (v - lo) / (hi - lo) * bins;
  int found = 0;
  for (int b = 0; b < bins; ++b) {
    if (scaled >= b) found = b;
  }
  return found;
}

bool fg(const hdg::DepthSequence& d, int t, int y, int x) {
  if (d.at(t, y, x) == 0) return false;
  if (d.has_mask() && d.mask()[d.index(t, y, x)] == 0) return false;
  return true;
}

}  // namespace

std::vector<std::uint32_t> hod_counts(const hdg::DepthSequence& depth, const hdg::HdgConfig& config) {
  const int W = depth.width(), H = depth.height(), T = depth.num_frames();
  const auto g = config.grid;
  const int bins = config.hod_bins;

  bool any = false;
  long long lo = 0, hi = 0;
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (fg(depth, t, y, x)) {
          const long long v = depth.at(t, y, x);
          if (!any || v < lo) lo = v;
          if (!any || v > hi) hi = v;
          any = true;
        }

  std::vector<std::uint32_t> out;
  for (int cx = 0; cx < g.x; ++cx)
    for (int cy = 0; cy < g.y; ++cy)
      for (int ct = 0; ct < g.t; ++ct) {
        std::vector<std::uint32_t> hist(bins, 0);
        if (any) {
          for (int t = cell_begin(ct, T, g.t); t < cell_begin(ct + 1, T, g.t); ++t)
            for (int y = cell_begin(cy, H, g.y); y < cell_begin(cy + 1, H, g.y); ++y)
              for (int x = cell_begin(cx, W, g.x); x < cell_begin(cx + 1, W, g.x); ++x)
                if (fg(depth, t, y, x)) ++hist[scan_bin_int(depth.at(t, y, x) - lo, hi - lo, bins)];
        }
        out.insert(out.end(), hist.begin(), hist.end());
      }
  return out;
}

std::vector<std::uint32_t> hodg_counts(const hdg::DepthSequence& depth, const hdg::HdgConfig& config) {
  const int W = depth.width(), H = depth.height(), T = depth.num_frames();
  const auto g = config.grid;
  const int bins[3] = {config.hodg_bins.x, config.hodg_bins.y, config.hodg_bins.t};

  // Padded copies: a one-voxel border of background around the clip.
  const int PW = W + 2, PH = H + 2, PT = T + 2;
  auto pidx = [&](int t, int y, int x) { return (static_cast<std::size_t>(t + 1) * PH + (y + 1)) * PW + (x + 1); };
  std::vector<long long> val(static_cast<std::size_t>(PW) * PH * PT, 0);
  std::vector<char> on(val.size(), 0);
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        val[pidx(t, y, x)] = depth.at(t, y, x);
        on[pidx(t, y, x)] = fg(depth, t, y, x) ? 1 : 0;
      }

  // Doubled derivative per channel at every voxel.
  auto deriv = [&](int t, int y, int x, int ch) -> long long {
    const int dx = ch == 0, dy = ch == 1, dt = ch == 2;
    const auto here = pidx(t, y, x), before = pidx(t - dt, y - dy, x - dx), after = pidx(t + dt, y + dy, x + dx);
    if (on[before] && on[after]) return val[after] - val[before];
    if (on[after]) return 2 * (val[after] - val[here]);
    if (on[before]) return 2 * (val[here] - val[before]);
    return 0;
  };

  const int channels = T > 1 ? 3 : 2;
  long long lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  bool any = false;
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (!on[pidx(t, y, x)]) continue;
        for (int ch = 0; ch < channels; ++ch) {
          const long long d = deriv(t, y, x, ch);
          lo[ch] = any ? std::min(lo[ch], d) : d;
          hi[ch] = any ? std::max(hi[ch], d) : d;
        }
        any = true;
      }

  std::vector<std::uint32_t> out;
  for (int cx = 0; cx < g.x; ++cx)
    for (int cy = 0; cy < g.y; ++cy)
      for (int ct = 0; ct < g.t; ++ct)
        for (int ch = 0; ch < 3; ++ch) {
          std::vector<std::uint32_t> hist(bins[ch], 0);
          if (ch < channels) {
            for (int t = cell_begin(ct, T, g.t); t < cell_begin(ct + 1, T, g.t); ++t)
              for (int y = cell_begin(cy, H, g.y); y < cell_begin(cy + 1, H, g.y); ++y)
                for (int x = cell_begin(cx, W, g.x); x < cell_begin(cx + 1, W, g.x); ++x)
                  if (on[pidx(t, y, x)]) ++hist[scan_bin_int(deriv(t, y, x, ch) - lo[ch], hi[ch] - lo[ch], bins[ch])];
          }
          out.insert(out.end(), hist.begin(), hist.end());
        }
  return out;
}

std::vector<std::uint32_t> jpd_counts(const hdg::SkeletonSequence& s, const hdg::HdgConfig& config) {
  const int bins = config.jpd_bins;
  const int ref = s.reference_joint();
  std::vector<std::uint32_t> out;
  for (int axis = 0; axis < 3; ++axis) {
    auto offset = [&](int t, int j) {
      const auto& p = s.at(t, j);
      const auto& r = s.at(t, ref);
      return axis == 0 ? p.x - r.x : axis == 1 ? p.y - r.y : p.z - r.z;
    };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int t = 0; t < s.num_frames(); ++t)
      for (int j = 0; j < s.num_joints(); ++j)
        if (j != ref) {
          lo = std::min(lo, offset(t, j));
          hi = std::max(hi, offset(t, j));
        }
    std::vector<std::uint32_t> hist(bins, 0);
    for (int t = 0; t < s.num_frames(); ++t)
      for (int j = 0; j < s.num_joints(); ++j)
        if (j != ref) ++hist[scan_bin_real(offset(t, j), lo, hi, bins)];
    out.insert(out.end(), hist.begin(), hist.end());
  }
  return out;
}

std::vector<double> jmv_values(const hdg::SkeletonSequence& s, const hdg::HdgConfig& config) {
  const auto c = config.jmv_cells;
  const int T = s.num_frames();
  const int ref = s.reference_joint();
  std::vector<double> out;
  for (int j = 0; j < s.num_joints(); ++j) {
    double xlo = s.at(0, j).x, xhi = xlo, ylo = s.at(0, j).y, yhi = ylo;
    for (int t = 0; t < T; ++t) {
      xlo = std::min(xlo, s.at(t, j).x);
      xhi = std::max(xhi, s.at(t, j).x);
      ylo = std::min(ylo, s.at(t, j).y);
      yhi = std::max(yhi, s.at(t, j).y);
    }
    for (int cx = 0; cx < c.x; ++cx)
      for (int cy = 0; cy < c.y; ++cy)
        for (int ct = 0; ct < c.t; ++ct) {
          std::vector<int> frames;
          for (int t = cell_begin(ct, T, c.t); t < cell_begin(ct + 1, T, c.t); ++t) {
            if (scan_bin_real(s.at(t, j).x, xlo, xhi, c.x) == cx && scan_bin_real(s.at(t, j).y, ylo, yhi, c.y) == cy) {
              frames.push_back(t);
            }
          }
          if (frames.empty()) {
            out.insert(out.end(), 6, 0.0);
            continue;
          }
          const double inf = std::numeric_limits<double>::infinity();
          double mn[3] = {inf, inf, inf}, mx[3] = {-inf, -inf, -inf}, rsum[2] = {0, 0};
          for (int t : frames) {
            const auto& p = s.at(t, j);
            const double v[3] = {p.x, p.y, p.z};
            for (int a = 0; a < 3; ++a) {
              mn[a] = std::min(mn[a], v[a]);
              mx[a] = std::max(mx[a], v[a]);
            }
            rsum[0] += s.at(t, ref).x;
            rsum[1] += s.at(t, ref).y;
          }
          const double n = static_cast<double>(frames.size());
          const double rx = rsum[0] / n, ry = rsum[1] / n;
          out.push_back((mx[0] - mn[0]) * (mx[1] - mn[1]) * (mx[2] - mn[2]));
          out.push_back(mn[0] - rx);
          out.push_back(mx[0] - rx);
          out.push_back(mn[1] - ry);
          out.push_back(mx[1] - ry);
          out.push_back(mx[2] - mn[2]);
        }
  }
  return out;
}

std::vector<double> normalize(const std::vector<std::uint32_t>& counts, const std::vector<int>& sizes) {
  std::vector<double> out;
  std::size_t pos = 0;
  for (std::size_t k = 0; pos < counts.size(); ++k) {
    const auto n = static_cast<std::size_t>(sizes[k % sizes.size()]);
    double total = 0;
    for (std::size_t i = pos; i < pos + n; ++i) total += counts[i];
    for (std::size_t i = pos; i < pos + n; ++i) out.push_back(total > 0 ? counts[i] / total : 0.0);
    pos += n;
  }
  return out;
}

hdg::DepthSequence random_depth(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_w(1, 10), dim_h(1, 10), dim_t(1, 8), pct(0, 99);
  const int W = dim_w(rng), H = dim_h(rng), T = dim_t(rng);
  const std::size_t n = static_cast<std::size_t>(W) * H * T;
  // Narrow ranges produce ties and degenerate ranges; wide ones exercise binning.
  const int base = std::uniform_int_distribution<int>(1, 3000)(rng);
  const int spread = std::vector<int>{0, 3, 50, 4000}[std::uniform_int_distribution<int>(0, 3)(rng)];
  std::uniform_int_distribution<int> value(base, std::min(65535, base + spread));
  const int zero_pct = pct(rng) / 2;
  std::vector<std::uint16_t> values(n);
  for (auto& v : values) v = pct(rng) < zero_pct ? 0 : static_cast<std::uint16_t>(value(rng));
  std::vector<std::uint8_t> mask;
  if (pct(rng) < 40) {
    mask.resize(n);
    for (auto& m : mask) m = pct(rng) < 80 ? 1 : 0;
  }
  return hdg::DepthSequence(T, H, W, std::move(values), std::move(mask));
}

hdg::SkeletonSequence random_skeleton(std::mt19937_64& rng, int min_joints) {
  const int J = std::uniform_int_distribution<int>(min_joints, 6)(rng);
  const int T = std::uniform_int_distribution<int>(1, 8)(rng);
  const int ref = std::uniform_int_distribution<int>(0, J - 1)(rng);
  const bool integral = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  std::uniform_real_distribution<double> coord(-500.0, 500.0);
  std::vector<hdg::Joint> joints(static_cast<std::size_t>(T) * J);
  for (auto& j : joints) {
    j.x = integral ? std::round(coord(rng) / 50) : coord(rng);
    j.y = integral ? std::round(coord(rng) / 50) : coord(rng);
    j.z = integral ? std::round(coord(rng) / 50) + 2000 : coord(rng) + 2000;
    j.confidence = std::uniform_real_distribution<double>(0, 1)(rng);
  }
  return hdg::SkeletonSequence(T, J, std::move(joints), ref);
}

hdg::HdgConfig random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> cells(1, 4), bins(1, 9);
  hdg::HdgConfig c;
  c.grid = {cells(rng), cells(rng), cells(rng)};
  c.hod_bins = bins(rng);
  c.hodg_bins = {bins(rng), bins(rng), bins(rng)};
  c.jpd_bins = bins(rng);
  c.jmv_cells = {cells(rng), cells(rng), cells(rng)};
  return c;
}

}  // namespace oracle
