#include "support.hpp"

#include <algorithm>
#include <set>

namespace pdmc::testing {

SceneSpec small_spec(int width, int height, int n_views, std::uint64_t seed) {
  SceneSpec s;
  s.width = width;
  s.height = height;
  s.n_views = n_views;
  s.rng_seed = seed;
  s.plane_count = 4;
  return s;
}

MergeTree random_tree(std::mt19937_64& rng, int leaves) {
  MergeTree t(std::vector<std::size_t>(static_cast<std::size_t>(leaves), 1));
  std::vector<int> roots(static_cast<std::size_t>(leaves));
  for (int i = 0; i < leaves; ++i) roots[static_cast<std::size_t>(i)] = i;
  while (roots.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, roots.size() - 1);
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    while (j == i) j = pick(rng);
    const int id = t.merge(roots[i], roots[j]);
    roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
    roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
    roots.push_back(id);
  }
  return t;
}

std::vector<RdRecord> random_records(std::mt19937_64& rng, const MergeTree& tree) {
  std::uniform_int_distribution<int> d(1, 1000);
  std::uniform_int_distribution<int> r(1, 200);
  std::vector<RdRecord> out(static_cast<std::size_t>(tree.node_count()));
  for (int k = 0; k < tree.node_count(); ++k) {
    auto& rec = out[static_cast<std::size_t>(k)];
    rec.node = k;
    rec.distortion = d(rng);
    rec.rate_texture = r(rng);
    rec.rate_contour = r(rng);
  }
  return out;
}

Partition make_partition(int width, int height, const std::vector<std::int32_t>& labels) {
  return connected_components(width, height, labels);
}

GridHierarchy random_grid_hierarchy(std::mt19937_64& rng, int max_leaves, const RateModel& model) {
  const int w = 6;
  const int h = 5;
  const int n = w * h;
  std::uniform_int_distribution<int> count(2, max_leaves);
  const int target = count(rng);

  // Region growing from random seeds gives connected regions.
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> cells(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cells[static_cast<std::size_t>(i)] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  for (int s = 0; s < target; ++s) labels[static_cast<std::size_t>(cells[static_cast<std::size_t>(s)])] = s;
  for (bool changed = true; changed;) {
    changed = false;
    std::shuffle(cells.begin(), cells.end(), rng);
    for (int i : cells) {
      if (labels[static_cast<std::size_t>(i)] >= 0) continue;
      const int r = i / w;
      const int c = i % w;
      const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= h || q[1] < 0 || q[1] >= w) continue;
        const auto l = labels[static_cast<std::size_t>(q[0] * w + q[1])];
        if (l >= 0) {
          labels[static_cast<std::size_t>(i)] = l;
          changed = true;
          break;
        }
      }
    }
  }
  GridHierarchy g;
  g.leaves = connected_components(w, h, labels);

  // Colour partition: a coarser random grouping by column band.
  std::vector<std::int32_t> color(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> band(1, w - 1);
  const int split = band(rng);
  for (int i = 0; i < n; ++i) color[static_cast<std::size_t>(i)] = (i % w) < split ? 0 : 1;
  g.lp_color = connected_components(w, h, color);

  const auto leaves = g.leaves.region_count();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(leaves));
  for (int i = 0; i < leaves; ++i) sizes[static_cast<std::size_t>(i)] = g.leaves.regions()[static_cast<std::size_t>(i)].pixel_count;
  g.hierarchy.leaves = g.leaves;
  g.hierarchy.tree = MergeTree(sizes);

  // Adjacency between current roots.
  std::vector<int> root_of(static_cast<std::size_t>(leaves));
  for (int i = 0; i < leaves; ++i) root_of[static_cast<std::size_t>(i)] = i;
  std::set<std::pair<int, int>> leaf_adj;
  for (const auto& [pair, cnt] : boundary_counts(g.leaves)) leaf_adj.insert(pair);
  while (g.hierarchy.tree.node_count() < 2 * leaves - 1) {
    std::set<std::pair<int, int>> adj;
    for (const auto& [a, b] : leaf_adj) {
      const int ra = root_of[static_cast<std::size_t>(a)];
      const int rb = root_of[static_cast<std::size_t>(b)];
      if (ra != rb) adj.insert({std::min(ra, rb), std::max(ra, rb)});
    }
    std::vector<std::pair<int, int>> v(adj.begin(), adj.end());
    std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
    const auto [a, b] = v[pick(rng)];
    const int id = g.hierarchy.tree.merge(a, b);
    for (auto& r : root_of) {
      if (r == a || r == b) r = id;
    }
  }
  std::uniform_int_distribution<int> dist(0, 500);
  g.hierarchy.distortion.resize(static_cast<std::size_t>(g.hierarchy.tree.node_count()));
  for (int k = 0; k < g.hierarchy.tree.node_count(); ++k) {
    const TreeNode& nd = g.hierarchy.tree.node(k);
    double d = dist(rng);
    if (!nd.is_leaf()) d += g.hierarchy.distortion[static_cast<std::size_t>(nd.left)] + g.hierarchy.distortion[static_cast<std::size_t>(nd.right)];
    g.hierarchy.distortion[static_cast<std::size_t>(k)] = d;
  }
  g.hierarchy.planes.assign(g.hierarchy.distortion.size(), Plane3D{});
  g.hierarchy.merge_cost.assign(g.hierarchy.distortion.size(), 0.0);
  g.edges = leaf_edges(g.leaves, g.lp_color);
  g.records = compute_records(g.hierarchy.tree, g.hierarchy.distortion, g.edges, model);
  return g;
}

}  // namespace pdmc::testing
