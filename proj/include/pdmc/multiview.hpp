#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdmc/hierarchy.hpp"
#include "pdmc/rdopt.hpp"

namespace pdmc {

/// A view partition forward-projected into the reference raster.
struct ProjectedPartition {
  int width = 0;  // reference raster
  int height = 0;
  std::vector<std::int32_t> labels;  // source region label per ref pixel, -1 when empty
  std::vector<std::size_t> source_counts;     // pixels per source region
  std::vector<std::size_t> projected_counts;  // visible ref pixels per source region
  std::vector<std::uint8_t> occluded;         // per source region
  /// Ref pixel index per source pixel; -1 for pixels of occluded regions.
  /// Hidden or out-of-frame pixels inherit the nearest visible pixel of their region.
  std::vector<std::int32_t> correspondence;
};

/// Forward projection with z-buffering in scan order and nearest-integer
/// rounding. Regions with fewer than half of their pixels visible are occluded.
/// With `ref_depth`, a projected pixel further than the reference depth at its
/// target (by more than 2% of the depth range) is hidden as well.
ProjectedPartition project_partition(const Partition& p, const DepthMap& depth, const Camera& cam_src,
                                     const Camera& cam_ref, int ref_width, int ref_height,
                                     const DepthMap* ref_depth = nullptr);
ProjectedPartition project_partition(const Partition& p, const DepthMap& depth, const Camera& cam_src,
                                     const Camera& cam_ref);

/// Replaces the correspondence of every region of `vote` by one shared target:
/// the first pixel (raster order) mapped into the region's most frequent
/// reference leaf, ties to the smaller leaf. Pixels without a target stay -1.
void snap_correspondence(ProjectedPartition& proj, const Partition& ref_leaves, const Partition& vote);
/// Every empty pixel takes the label of the nearest labelled pixel (squared
/// distance, then row, then column). Returns a full label map.
std::vector<std::int32_t> fill_nearest(std::span<const std::int32_t> labels, int width, int height);

/// Intersection of the hole-filled projections.
Partition accumulate(std::span<const ProjectedPartition> projected);

struct MultiViewNodeRecord {
  int node = 0;
  std::vector<double> view_distortion;          // per view
  std::vector<NodeBoundary> view_boundary;      // elements between the children, per view
  double distortion = 0.0;                      // sum over views
  NodeBoundary boundary;                        // sum over views
};

/// The reference hierarchy with planes fitted over all views and RD records
/// aggregated over all views.
struct MultiViewHierarchy {
  Hierarchy hierarchy;
  std::vector<MultiViewNodeRecord> nodes;
  std::vector<LeafEdge> edges;  // summed over views
  std::vector<RdRecord> records;
};

/// Leaf of the reference hierarchy for every pixel of a view, -1 for pixels
/// of occluded regions.
std::vector<std::int32_t> view_leaf_map(const Partition& ref_leaves, const ProjectedPartition& proj);

/// `h_ref` is built over the accumulated partition in the reference view.
/// `views`, `lp_colors` and `projections` are indexed alike.
MultiViewHierarchy multiview_records(const Hierarchy& h_ref, std::span<const ViewBundle> views,
                                     std::span<const Partition> lp_colors,
                                     std::span<const ProjectedPartition> projections,
                                     const HierarchyConfig& cfg, const RateModel& model);

struct CodingPartition {
  Partition partition;
  std::vector<std::int32_t> ref_labels;     // per region, -1 for occluded regions
  std::vector<std::int32_t> source_region;  // per region, the occluded source region or -1
};

/// Pixels take the label of their reference pixel; pixels of occluded regions
/// keep one dedicated label per source region.
std::vector<CodingPartition> backproject_coding_partitions(const Partition& p_ref,
                                                           std::span<const ProjectedPartition> projections,
                                                           std::span<const Partition> sources);

}  // namespace pdmc
