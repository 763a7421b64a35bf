#pragma once

// Slow reference implementations of the four feature families. They iterate
// cell by cell with explicit voxel ranges and find bins by linear scan, so they
// share no code with the library beyond the public data types.

#include <cstdint>
#include <random>
#include <vector>

#include "hdgkit/core.hpp"

namespace oracle {

std::vector<std::uint32_t> hod_counts(const hdg::DepthSequence& depth, const hdg::HdgConfig& config);
std::vector<std::uint32_t> hodg_counts(const hdg::DepthSequence& depth, const hdg::HdgConfig& config);
std::vector<std::uint32_t> jpd_counts(const hdg::SkeletonSequence& skeleton, const hdg::HdgConfig& config);
std::vector<double> jmv_values(const hdg::SkeletonSequence& skeleton, const hdg::HdgConfig& config);

/// Divides each histogram of `sizes[k % sizes.size()]` bins by its own sum.
std::vector<double> normalize(const std::vector<std::uint32_t>& counts, const std::vector<int>& sizes);

// Random inputs within the oracle size limits (depth <= 10x10x8, J <= 6).
hdg::DepthSequence random_depth(std::mt19937_64& rng);
hdg::SkeletonSequence random_skeleton(std::mt19937_64& rng, int min_joints = 1);
hdg::HdgConfig random_config(std::mt19937_64& rng);

}  // namespace oracle
