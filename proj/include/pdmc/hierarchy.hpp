#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pdmc/geometry.hpp"
#include "pdmc/kernels.hpp"
#include "pdmc/partition.hpp"

namespace pdmc {

struct TreeNode {
  int left = -1;  // -1 for leaves
  int right = -1;
  int parent = -1;  // -1 for the root
  std::size_t pixel_count = 0;

  bool is_leaf() const { return left < 0; }
};

/// Binary merge tree. Nodes 0..L-1 are the leaves; node L+k is created by the
/// k-th merge, so node order is the merging sequence.
class MergeTree {
 public:
  MergeTree() = default;
  explicit MergeTree(std::vector<std::size_t> leaf_sizes);

  /// Appends the union of nodes a and b and returns its id.
  int merge(int a, int b);

  int leaf_count() const { return leaf_count_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int root() const { return node_count() - 1; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool complete() const { return node_count() == 2 * leaf_count_ - 1; }

  /// Leaf ids under node k, ascending.
  std::vector<int> leaves_under(int k) const;
  /// Lowest common ancestor of two nodes.
  int lca(int a, int b) const;
  int depth(int k) const;

 private:
  int leaf_count_ = 0;
  std::vector<TreeNode> nodes_;
};

/// Antichain of node ids that covers every leaf exactly once; ascending.
struct Cut {
  std::vector<int> nodes;
  bool operator==(const Cut&) const = default;
};

/// Throws InvalidArgument unless the cut covers every leaf exactly once.
void validate_cut(const MergeTree& tree, const Cut& cut);
Cut leaves_cut(const MergeTree& tree);
Cut root_cut(const MergeTree& tree);

struct HierarchyConfig {
  RansacConfig ransac;
  /// Node planes are fitted with RANSAC above this size, least squares below.
  std::size_t ransac_min_pixels = 200;
};

/// Binary partition tree with one plane model and squared depth error per node.
struct Hierarchy {
  Partition leaves;
  MergeTree tree;
  std::vector<Plane3D> planes;       // world frame
  std::vector<double> distortion;    // squared depth error of the node under its plane
  std::vector<double> merge_cost;    // priority used during construction (0 for leaves)

  int leaf_count() const { return tree.leaf_count(); }
};

/// Greedy agglomeration of adjacent regions by least increase of planar-fit
/// squared depth error, then one plane fit per node.
Hierarchy build_bpt(const Partition& leaf, const DepthMap& depth, const Camera& camera,
                    const HierarchyConfig& cfg);

/// Pixel lists of every node, in raster order.
std::vector<std::vector<std::int32_t>> node_pixel_lists(const MergeTree& tree,
                                                        const Partition& leaves);

/// Pixels of every node in one view.
struct NodeSampleSource {
  const kernels::ViewGeometry* view = nullptr;
  const std::vector<std::vector<std::int32_t>>* node_pixels = nullptr;
};

/// One plane per node fitted over the union of the node's pixels in all
/// sources, gathered in source order. The RANSAC seed is mixed with the node
/// id; the fallback plane is fronto-parallel to the first source's camera.
std::vector<Plane3D> fit_node_planes(std::span<const NodeSampleSource> sources, int node_count,
                                     const HierarchyConfig& cfg);

/// Partition obtained after the first L-k merges of the merging sequence.
Partition cut_at(const Hierarchy& h, int k);
Cut cut_at_nodes(const MergeTree& tree, int k);

/// Partition whose regions are the cut nodes. Region labels follow raster order.
Partition cut_to_partition(const Hierarchy& h, const Cut& cut);
/// Cut index (position in cut.nodes) of every leaf.
std::vector<int> leaf_to_cut_index(const MergeTree& tree, const Cut& cut);

/// One line per node: id child1 child2 pixel_count nx ny nz d dD dR. `delta_d`
/// and `delta_r` may be empty, in which case zeros are written.
void dump_hierarchy(std::ostream& out, const Hierarchy& h, std::span<const double> delta_d,
                    std::span<const double> delta_r);

}  // namespace pdmc
