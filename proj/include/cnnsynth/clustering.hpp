#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnnsynth/costmodel.hpp"
#include "cnnsynth/trace.hpp"

namespace cnnsynth {

struct FilterBin {
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  Count count = 0;

  friend bool operator==(const FilterBin&, const FilterBin&) = default;
};

struct GroupTargets {
  Count mac_real = 0;
  Count wp_real = 0;

  friend bool operator==(const GroupTargets&, const GroupTargets&) = default;
};

struct GroupSpec {
  std::int64_t center_h = 0;
  std::int64_t center_w = 0;
  // Kernel descending, then stride descending; (kernel, stride) unique.
  std::vector<FilterBin> bins;
  // Indices into the originating trace. Empty when loaded from a file.
  std::vector<std::size_t> member_indices;

  std::int64_t area() const { return center_h * center_w; }
  Count slot_count() const;
};

struct ClusterSet {
  // Strictly decreasing center area.
  std::vector<GroupSpec> groups;
  std::vector<GroupTargets> targets;
  std::string cost_model_id;
};

// One input-size cluster before binning.
struct SizeCluster {
  std::int64_t center_h = 0;
  std::int64_t center_w = 0;
  std::vector<std::size_t> member_indices;
};

// Agglomerative nearest-neighbour clustering on log(input_h * input_w).
// Clusters merge while their centers are within merge_tolerance * log(2);
// each center is the occurrence-weighted medoid of its member sizes.
std::vector<SizeCluster> cluster_by_input_size(const Trace& trace, double merge_tolerance);

std::vector<FilterBin> bin_group(std::span<const ConvRecord> members);

GroupTargets compute_group_targets(std::span<const ConvRecord> members, const CostModel& model);

ClusterSet build_cluster_set(const Trace& trace, double merge_tolerance, const CostModel& model);

// Shrinks bin counts and targets by `factor` in (0, 1]; counts never drop
// below one.
ClusterSet scale_clusters(const ClusterSet& cs, double factor);

// Throws ClusterError if any ClusterSet invariant is violated.
void validate_cluster_set(const ClusterSet& cs);

std::string cluster_set_to_json(const ClusterSet& cs);
ClusterSet cluster_set_from_json(std::string_view text);

// Group / center / counts / filter table in the layout of the usual
// "statistical data of convolutional operations" summary.
std::string cluster_summary(const ClusterSet& cs);

}  // namespace cnnsynth
