#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "pdmc/geometry.hpp"
#include "pdmc/scene_io.hpp"

namespace pdmc {

struct RegionInfo {
  std::size_t pixel_count = 0;
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;
};

/// Dense label map whose regions are 4-connected and numbered 0..R-1 in
/// raster order of first occurrence. Only connected_components() creates one,
/// so every instance satisfies these invariants.
class Partition {
 public:
  Partition() = default;

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return labels_.size(); }
  int region_count() const { return static_cast<int>(regions_.size()); }
  std::int32_t label(int row, int col) const {
    return labels_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::int32_t operator[](std::size_t index) const { return labels_[index]; }
  std::span<const std::int32_t> labels() const { return labels_; }
  const std::vector<RegionInfo>& regions() const { return regions_; }

  bool operator==(const Partition& other) const {
    return width_ == other.width_ && height_ == other.height_ && labels_ == other.labels_;
  }

 private:
  friend Partition connected_components(int width, int height, std::span<const std::int32_t> labels);
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> labels_;
  std::vector<RegionInfo> regions_;
};

/// Splits an arbitrary label map into 4-connected components, numbered in
/// raster order of first occurrence.
Partition connected_components(int width, int height, std::span<const std::int32_t> labels);

/// Two 4-adjacent pixels (linear indices, first < second) with different labels.
struct BoundaryElement {
  std::int32_t first = 0;
  std::int32_t second = 0;
  auto operator<=>(const BoundaryElement&) const = default;
};

/// Every boundary element of the partition, in raster order of `first`,
/// horizontal neighbour before vertical.
std::vector<BoundaryElement> boundary_elements(const Partition& p);

/// Deterministic colour segmentation into exactly min(n_regions, pixels)
/// regions by greedy merging of single-pixel leaves.
Partition leaf_color_partition(const ColorImage& image, int n_regions);

/// Deterministic depth segmentation into min(n_regions, seeds) regions by
/// greedy merging of a regular seed grid; merge cost is the increase of the
/// planar-fit squared depth error.
Partition leaf_depth_partition(const DepthMap& depth, const Camera& camera, int n_regions);

/// Coarsest common refinement of two partitions.
Partition intersect(const Partition& a, const Partition& b);

/// Number of boundary elements between regions r1 and r2.
std::int64_t common_boundary_count(const Partition& p, int r1, int r2);

/// Boundary element counts for every adjacent pair (min label, max label).
std::map<std::pair<int, int>, std::int64_t> boundary_counts(const Partition& p);

enum class BoundaryTag : std::uint8_t { kColor, kDepth };

struct TaggedBoundary {
  BoundaryElement element;
  BoundaryTag tag;
};

/// Tags each boundary element of `p_cd` by whether the colour partition also
/// separates the pixel pair. Throws InvalidArgument unless p_cd refines both.
std::vector<TaggedBoundary> boundary_provenance(const Partition& p_cd, const Partition& lp_color,
                                                const Partition& lp_depth);

/// True when every region of `fine` lies inside one region of `coarse`.
bool refines(const Partition& fine, const Partition& coarse);

Gray16 partition_to_pgm(const Partition& p);
Partition partition_from_pgm(const Gray16& image);

}  // namespace pdmc
