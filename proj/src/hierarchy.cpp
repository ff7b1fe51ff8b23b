#include "pdmc/hierarchy.hpp"

#include <algorithm>
#include <ostream>

#include "merge_engine.hpp"
#include "planar_model.hpp"
#include "pdmc/error.hpp"

namespace pdmc {

MergeTree::MergeTree(std::vector<std::size_t> leaf_sizes)
    : leaf_count_(static_cast<int>(leaf_sizes.size())) {
  nodes_.reserve(leaf_sizes.size() * 2);
  for (std::size_t s : leaf_sizes) nodes_.push_back({-1, -1, -1, s});
}

int MergeTree::merge(int a, int b) {
  if (a < 0 || b < 0 || a >= node_count() || b >= node_count() || a == b) {
    throw InvalidArgument("merge of invalid node ids");
  }
  auto& na = nodes_[static_cast<std::size_t>(a)];
  auto& nb = nodes_[static_cast<std::size_t>(b)];
  if (na.parent >= 0 || nb.parent >= 0) throw InvalidArgument("node merged twice");
  const int id = node_count();
  na.parent = id;
  nb.parent = id;
  nodes_.push_back({a, b, -1, na.pixel_count + nb.pixel_count});
  return id;
}

std::vector<int> MergeTree::leaves_under(int k) const {
  std::vector<int> out;
  std::vector<int> stack{k};
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    const TreeNode& n = node(x);
    if (n.is_leaf()) {
      out.push_back(x);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int MergeTree::depth(int k) const {
  int d = 0;
  while (node(k).parent >= 0) {
    k = node(k).parent;
    ++d;
  }
  return d;
}

int MergeTree::lca(int a, int b) const {
  // Parents always have larger ids than their children.
  while (a != b) {
    if (a < b) {
      a = node(a).parent;
    } else {
      b = node(b).parent;
    }
    if (a < 0 || b < 0) throw InvalidArgument("nodes have no common ancestor");
  }
  return a;
}

void validate_cut(const MergeTree& tree, const Cut& cut) {
  std::vector<std::uint8_t> in_cut(static_cast<std::size_t>(tree.node_count()), 0);
  for (int k : cut.nodes) {
    if (k < 0 || k >= tree.node_count()) throw InvalidArgument("cut references an invalid node");
    if (in_cut[static_cast<std::size_t>(k)]) throw InvalidArgument("cut lists a node twice");
    in_cut[static_cast<std::size_t>(k)] = 1;
  }
  for (int leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    int hits = 0;
    for (int x = leaf; x >= 0; x = tree.node(x).parent) hits += in_cut[static_cast<std::size_t>(x)];
    if (hits != 1) throw InvalidArgument("cut is not an antichain covering every leaf");
  }
}

Cut leaves_cut(const MergeTree& tree) {
  Cut c;
  for (int i = 0; i < tree.leaf_count(); ++i) c.nodes.push_back(i);
  return c;
}

Cut root_cut(const MergeTree& tree) { return Cut{{tree.root()}}; }

std::vector<std::vector<std::int32_t>> node_pixel_lists(const MergeTree& tree,
                                                        const Partition& leaves) {
  std::vector<std::vector<std::int32_t>> lists(static_cast<std::size_t>(tree.node_count()));
  for (std::size_t i = 0; i < leaves.pixel_count(); ++i) {
    lists[static_cast<std::size_t>(leaves[i])].push_back(static_cast<std::int32_t>(i));
  }
  for (int k = tree.leaf_count(); k < tree.node_count(); ++k) {
    const TreeNode& n = tree.node(k);
    const auto& a = lists[static_cast<std::size_t>(n.left)];
    const auto& b = lists[static_cast<std::size_t>(n.right)];
    auto& out = lists[static_cast<std::size_t>(k)];
    out.resize(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  }
  return lists;
}

std::vector<Plane3D> fit_node_planes(std::span<const NodeSampleSource> sources, int node_count,
                                     const HierarchyConfig& cfg) {
  std::vector<Plane3D> planes(static_cast<std::size_t>(node_count));
  const Camera& frame = sources.front().view->camera;
#pragma omp parallel for schedule(dynamic, 4)
  for (int k = 0; k < node_count; ++k) {
    std::vector<Vec3> points;
    std::vector<double> depths;
    for (const NodeSampleSource& src : sources) {
      for (const std::int32_t p : (*src.node_pixels)[static_cast<std::size_t>(k)]) {
        points.push_back(src.view->world_points[static_cast<std::size_t>(p)]);
        depths.push_back(src.view->depth[static_cast<std::size_t>(p)]);
      }
    }
    RansacConfig rc = cfg.ransac;
    rc.rng_seed = cfg.ransac.rng_seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k);
    planes[static_cast<std::size_t>(k)] = fit_region_plane(points, depths, frame, rc, cfg.ransac_min_pixels);
  }
  return planes;
}

Hierarchy build_bpt(const Partition& leaf, const DepthMap& depth, const Camera& camera,
                    const HierarchyConfig& cfg) {
  if (leaf.width() != depth.width || leaf.height() != depth.height) {
    throw InvalidArgument("leaf partition and depth map differ in size");
  }
  const kernels::ViewGeometry view(depth, camera);
  const auto n_leaves = static_cast<std::size_t>(leaf.region_count());

  detail::PlanarModel model{&view};
  std::vector<detail::PlanarModel::Region> units(n_leaves);
  for (std::size_t i = 0; i < leaf.pixel_count(); ++i) {
    model.add_pixel(units[static_cast<std::size_t>(leaf[i])], static_cast<std::int32_t>(i));
  }
  for (auto& u : units) model.finalize(u);

  std::vector<std::pair<int, int>> edges;
  for (const auto& [pair, count] : boundary_counts(leaf)) edges.push_back(pair);

  std::vector<std::size_t> sizes(n_leaves);
  for (std::size_t i = 0; i < n_leaves; ++i) sizes[i] = leaf.regions()[i].pixel_count;

  Hierarchy h;
  h.leaves = leaf;
  h.tree = MergeTree(sizes);
  h.merge_cost.assign(n_leaves, 0.0);
  detail::GreedyMerger<detail::PlanarModel> merger(model, std::move(units), edges);
  for (const auto& step : merger.run(1)) {
    const int id = h.tree.merge(step.a, step.b);
    if (id != step.merged) throw Error("merge bookkeeping out of sync");
    h.merge_cost.push_back(step.cost);
  }
  if (!h.tree.complete()) throw Error("leaf partition is not connected");

  const auto lists = node_pixel_lists(h.tree, leaf);
  const NodeSampleSource src{&view, &lists};
  h.planes = fit_node_planes(std::span(&src, 1), h.tree.node_count(), cfg);
  h.distortion.assign(h.planes.size(), 0.0);
  kernels::node_sse_parallel(h.planes, lists, view, h.distortion);
  return h;
}

Cut cut_at_nodes(const MergeTree& tree, int k) {
  const int L = tree.leaf_count();
  if (k < 1 || k > L) throw InvalidArgument("cut_at needs 1 <= k <= number of leaves");
  const int limit = L + (L - k);  // nodes created by the first L-k merges
  Cut c;
  for (int id = 0; id < limit; ++id) {
    const int parent = tree.node(id).parent;
    if (parent < 0 || parent >= limit) c.nodes.push_back(id);
  }
  return c;
}

Partition cut_at(const Hierarchy& h, int k) { return cut_to_partition(h, cut_at_nodes(h.tree, k)); }

std::vector<int> leaf_to_cut_index(const MergeTree& tree, const Cut& cut) {
  validate_cut(tree, cut);
  std::vector<int> owner(static_cast<std::size_t>(tree.node_count()), -1);
  for (std::size_t i = 0; i < cut.nodes.size(); ++i) owner[static_cast<std::size_t>(cut.nodes[i])] = static_cast<int>(i);
  std::vector<int> out(static_cast<std::size_t>(tree.leaf_count()));
  for (int leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    int x = leaf;
    while (owner[static_cast<std::size_t>(x)] < 0) x = tree.node(x).parent;
    out[static_cast<std::size_t>(leaf)] = owner[static_cast<std::size_t>(x)];
  }
  return out;
}

Partition cut_to_partition(const Hierarchy& h, const Cut& cut) {
  const auto owner = leaf_to_cut_index(h.tree, cut);
  std::vector<std::int32_t> labels(h.leaves.pixel_count());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = owner[static_cast<std::size_t>(h.leaves[i])];
  return connected_components(h.leaves.width(), h.leaves.height(), labels);
}

void dump_hierarchy(std::ostream& out, const Hierarchy& h, std::span<const double> delta_d,
                    std::span<const double> delta_r) {
  for (int k = 0; k < h.tree.node_count(); ++k) {
    const TreeNode& n = h.tree.node(k);
    const Plane3D& p = h.planes[static_cast<std::size_t>(k)];
    const auto ki = static_cast<std::size_t>(k);
    out << k << ' ' << n.left << ' ' << n.right << ' ' << n.pixel_count << ' ' << p.normal.x() << ' '
        << p.normal.y() << ' ' << p.normal.z() << ' ' << p.offset << ' '
        << (ki < delta_d.size() ? delta_d[ki] : 0.0) << ' ' << (ki < delta_r.size() ? delta_r[ki] : 0.0)
        << '\n';
  }
}

}  // namespace pdmc
