#include "pdmc/multiview.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

#include "pdmc/error.hpp"

namespace pdmc {

ProjectedPartition project_partition(const Partition& p, const DepthMap& depth, const Camera& cam_src,
                                     const Camera& cam_ref, int ref_width, int ref_height,
                                     const DepthMap* ref_depth) {
  if (p.width() != depth.width || p.height() != depth.height) {
    throw InvalidArgument("partition and depth map differ in size");
  }
  const int w = p.width();
  const std::size_t n = p.pixel_count();
  const auto regions = static_cast<std::size_t>(p.region_count());

  std::vector<kernels::WarpTarget> targets(n);
  kernels::warp_parallel(depth, cam_src, cam_ref, ref_width, ref_height, targets);

  ProjectedPartition out;
  out.width = ref_width;
  out.height = ref_height;
  const std::size_t ref_n = static_cast<std::size_t>(ref_width) * static_cast<std::size_t>(ref_height);
  std::vector<std::int32_t> owner(ref_n, -1);
  std::vector<double> zbuf(ref_n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = targets[i];
    if (t.index < 0) continue;
    const auto ti = static_cast<std::size_t>(t.index);
    if (t.depth < zbuf[ti]) {
      zbuf[ti] = t.depth;
      owner[ti] = static_cast<std::int32_t>(i);
    }
  }

  if (ref_depth != nullptr) {
    if (ref_depth->width != ref_width || ref_depth->height != ref_height) {
      throw InvalidArgument("reference depth map differs from the reference raster");
    }
    const double tol = 0.02 * (ref_depth->max_z - ref_depth->min_z);
    for (std::size_t t = 0; t < ref_n; ++t) {
      if (owner[t] >= 0 && zbuf[t] > static_cast<double>(ref_depth->values[t]) + tol) owner[t] = -1;
    }
  }

  out.source_counts.assign(regions, 0);
  for (std::size_t i = 0; i < n; ++i) ++out.source_counts[static_cast<std::size_t>(p[i])];
  out.projected_counts.assign(regions, 0);
  for (std::size_t t = 0; t < ref_n; ++t) {
    if (owner[t] >= 0) ++out.projected_counts[static_cast<std::size_t>(p[static_cast<std::size_t>(owner[t])])];
  }
  out.occluded.assign(regions, 0);
  for (std::size_t r = 0; r < regions; ++r) {
    out.occluded[r] = 2 * out.projected_counts[r] < out.source_counts[r] ? 1 : 0;
  }

  out.labels.assign(ref_n, -1);
  out.correspondence.assign(n, -1);
  std::deque<std::size_t> queue;
  for (std::size_t t = 0; t < ref_n; ++t) {
    if (owner[t] < 0) continue;
    const auto src = static_cast<std::size_t>(owner[t]);
    if (out.occluded[static_cast<std::size_t>(p[src])]) continue;
    out.labels[t] = p[src];
    out.correspondence[src] = static_cast<std::int32_t>(t);
  }
  // Seed in source raster order so the propagation is deterministic.
  for (std::size_t i = 0; i < n; ++i) {
    if (out.correspondence[i] >= 0) queue.push_back(i);
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int r = static_cast<int>(i / static_cast<std::size_t>(w));
    const int c = static_cast<int>(i % static_cast<std::size_t>(w));
    const auto visit = [&](std::size_t j) {
      if (out.correspondence[j] < 0 && p[j] == p[i]) {
        out.correspondence[j] = out.correspondence[i];
        queue.push_back(j);
      }
    };
    if (c > 0) visit(i - 1);
    if (c + 1 < w) visit(i + 1);
    if (r > 0) visit(i - static_cast<std::size_t>(w));
    if (r + 1 < p.height()) visit(i + static_cast<std::size_t>(w));
  }
  return out;
}

ProjectedPartition project_partition(const Partition& p, const DepthMap& depth, const Camera& cam_src,
                                     const Camera& cam_ref) {
  return project_partition(p, depth, cam_src, cam_ref, p.width(), p.height());
}

std::vector<std::int32_t> fill_nearest(std::span<const std::int32_t> labels, int width, int height) {
  std::vector<std::int32_t> out(labels.begin(), labels.end());
  if (std::none_of(labels.begin(), labels.end(), [](std::int32_t l) { return l >= 0; })) {
    throw InvalidArgument("cannot fill a label map without labelled pixels");
  }
  const int max_r = std::max(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto i = static_cast<std::size_t>(r) * width + c;
      if (labels[i] >= 0) continue;
      long long best_d = std::numeric_limits<long long>::max();
      int best_r = 0;
      int best_c = 0;
      for (int ring = 1; ring <= max_r; ++ring) {
        if (static_cast<long long>(ring) * ring > best_d) break;
        const auto probe = [&](int rr, int cc) {
          if (rr < 0 || rr >= height || cc < 0 || cc >= width) return;
          if (labels[static_cast<std::size_t>(rr) * width + cc] < 0) return;
          const long long d = static_cast<long long>(rr - r) * (rr - r) + static_cast<long long>(cc - c) * (cc - c);
          if (d < best_d || (d == best_d && (rr < best_r || (rr == best_r && cc < best_c)))) {
            best_d = d;
            best_r = rr;
            best_c = cc;
          }
        };
        for (int dc = -ring; dc <= ring; ++dc) {
          probe(r - ring, c + dc);
          probe(r + ring, c + dc);
        }
        for (int dr = -ring + 1; dr <= ring - 1; ++dr) {
          probe(r + dr, c - ring);
          probe(r + dr, c + ring);
        }
      }
      out[i] = labels[static_cast<std::size_t>(best_r) * width + best_c];
    }
  }
  return out;
}

Partition accumulate(std::span<const ProjectedPartition> projected) {
  if (projected.empty()) throw InvalidArgument("nothing to accumulate");
  const int w = projected.front().width;
  const int h = projected.front().height;
  std::vector<std::vector<std::int32_t>> filled;
  for (const auto& p : projected) {
    if (p.width != w || p.height != h) throw InvalidArgument("projections use different rasters");
    filled.push_back(fill_nearest(p.labels, w, h));
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::map<std::vector<std::int32_t>, std::int32_t> ids;
  std::vector<std::int32_t> labels(n);
  std::vector<std::int32_t> tuple(filled.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < filled.size(); ++v) tuple[v] = filled[v][i];
    const auto [it, inserted] = ids.try_emplace(tuple, static_cast<std::int32_t>(ids.size()));
    labels[i] = it->second;
  }
  return connected_components(w, h, labels);
}

void snap_correspondence(ProjectedPartition& proj, const Partition& ref_leaves, const Partition& vote) {
  if (vote.pixel_count() != proj.correspondence.size()) throw InvalidArgument("vote partition size mismatch");
  const auto n_regions = static_cast<std::size_t>(vote.region_count());
  std::vector<std::map<std::int32_t, std::size_t>> counts(n_regions);
  for (std::size_t i = 0; i < proj.correspondence.size(); ++i) {
    const std::int32_t t = proj.correspondence[i];
    if (t >= 0) ++counts[static_cast<std::size_t>(vote[i])][ref_leaves[static_cast<std::size_t>(t)]];
  }
  std::vector<std::int32_t> winner(n_regions, -1);
  for (std::size_t r = 0; r < n_regions; ++r) {
    std::size_t best = 0;
    for (const auto& [leaf, c] : counts[r]) {
      if (c > best) {
        best = c;
        winner[r] = leaf;
      }
    }
  }
  std::vector<std::int32_t> target(n_regions, -1);
  for (std::size_t i = 0; i < proj.correspondence.size(); ++i) {
    const std::int32_t t = proj.correspondence[i];
    const auto r = static_cast<std::size_t>(vote[i]);
    if (t >= 0 && target[r] < 0 && ref_leaves[static_cast<std::size_t>(t)] == winner[r]) target[r] = t;
  }
  for (std::size_t i = 0; i < proj.correspondence.size(); ++i) {
    if (proj.correspondence[i] >= 0) proj.correspondence[i] = target[static_cast<std::size_t>(vote[i])];
  }
}

std::vector<std::int32_t> view_leaf_map(const Partition& ref_leaves, const ProjectedPartition& proj) {
  std::vector<std::int32_t> out(proj.correspondence.size(), -1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int32_t t = proj.correspondence[i];
    if (t >= 0) out[i] = ref_leaves[static_cast<std::size_t>(t)];
  }
  return out;
}

namespace {

std::vector<std::vector<std::int32_t>> lists_from_leaf_map(const MergeTree& tree,
                                                           std::span<const std::int32_t> leaf_map) {
  std::vector<std::vector<std::int32_t>> lists(static_cast<std::size_t>(tree.node_count()));
  for (std::size_t i = 0; i < leaf_map.size(); ++i) {
    if (leaf_map[i] >= 0) lists[static_cast<std::size_t>(leaf_map[i])].push_back(static_cast<std::int32_t>(i));
  }
  for (int k = tree.leaf_count(); k < tree.node_count(); ++k) {
    const TreeNode& nd = tree.node(k);
    const auto& a = lists[static_cast<std::size_t>(nd.left)];
    const auto& b = lists[static_cast<std::size_t>(nd.right)];
    auto& out = lists[static_cast<std::size_t>(k)];
    out.resize(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  }
  return lists;
}

}  // namespace

MultiViewHierarchy multiview_records(const Hierarchy& h_ref, std::span<const ViewBundle> views,
                                     std::span<const Partition> lp_colors,
                                     std::span<const ProjectedPartition> projections,
                                     const HierarchyConfig& cfg, const RateModel& model) {
  if (views.empty() || views.size() != lp_colors.size() || views.size() != projections.size()) {
    throw InvalidArgument("views, colour partitions and projections must be indexed alike");
  }
  const MergeTree& tree = h_ref.tree;
  const auto n_nodes = static_cast<std::size_t>(tree.node_count());
  const std::size_t n_views = views.size();

  std::vector<kernels::ViewGeometry> geoms;
  std::vector<std::vector<std::int32_t>> leaf_maps;
  std::vector<std::vector<std::vector<std::int32_t>>> lists;
  geoms.reserve(n_views);
  for (std::size_t v = 0; v < n_views; ++v) {
    const auto& proj = projections[v];
    if (proj.correspondence.size() != views[v].depth.size()) throw InvalidArgument("missing correspondence");
    if (proj.width != h_ref.leaves.width() || proj.height != h_ref.leaves.height()) {
      throw InvalidArgument("projection raster differs from the reference hierarchy");
    }
    geoms.emplace_back(views[v].depth, views[v].camera);
    leaf_maps.push_back(view_leaf_map(h_ref.leaves, proj));
    lists.push_back(lists_from_leaf_map(tree, leaf_maps.back()));
  }

  MultiViewHierarchy out;
  out.hierarchy = h_ref;
  std::vector<NodeSampleSource> sources;
  for (std::size_t v = 0; v < n_views; ++v) sources.push_back({&geoms[v], &lists[v]});
  out.hierarchy.planes = fit_node_planes(sources, tree.node_count(), cfg);

  out.nodes.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    out.nodes[k].node = static_cast<int>(k);
    out.nodes[k].view_distortion.assign(n_views, 0.0);
    out.nodes[k].view_boundary.assign(n_views, {});
  }
  std::map<std::pair<int, int>, LeafEdge> edge_sum;
  std::vector<double> sse(n_nodes);
  for (std::size_t v = 0; v < n_views; ++v) {
    kernels::node_sse_parallel(out.hierarchy.planes, lists[v], geoms[v], sse);
    for (std::size_t k = 0; k < n_nodes; ++k) out.nodes[k].view_distortion[v] = sse[k];

    const auto& lm = leaf_maps[v];
    const Partition& lp = lp_colors[v];
    const int w = views[v].depth.width;
    const int h = views[v].depth.height;
    const auto add = [&](std::size_t i, std::size_t j) {
      const int a = lm[i];
      const int b = lm[j];
      if (a < 0 || b < 0 || a == b) return;
      const bool color = lp[i] != lp[j];
      LeafEdge& e = edge_sum[{std::min(a, b), std::max(a, b)}];
      e.a = std::min(a, b);
      e.b = std::max(a, b);
      (color ? e.color_elements : e.depth_elements) += 1;
      auto& nb = out.nodes[static_cast<std::size_t>(tree.lca(a, b))].view_boundary[v];
      (color ? nb.color_elements : nb.depth_elements) += 1;
    };
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const auto i = static_cast<std::size_t>(r) * w + c;
        if (c + 1 < w) add(i, i + 1);
        if (r + 1 < h) add(i, i + static_cast<std::size_t>(w));
      }
    }
  }

  out.hierarchy.distortion.assign(n_nodes, 0.0);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    auto& rec = out.nodes[k];
    for (std::size_t v = 0; v < n_views; ++v) {
      rec.distortion += rec.view_distortion[v];
      rec.boundary.depth_elements += rec.view_boundary[v].depth_elements;
      rec.boundary.color_elements += rec.view_boundary[v].color_elements;
    }
    out.hierarchy.distortion[k] = rec.distortion;
  }
  for (const auto& [key, e] : edge_sum) out.edges.push_back(e);
  out.records = compute_records(tree, out.hierarchy.distortion, out.edges, model);
  return out;
}

std::vector<CodingPartition> backproject_coding_partitions(const Partition& p_ref,
                                                           std::span<const ProjectedPartition> projections,
                                                           std::span<const Partition> sources) {
  if (projections.size() != sources.size()) throw InvalidArgument("one source partition per projection");
  std::vector<CodingPartition> out;
  const std::int32_t base = p_ref.region_count();
  for (std::size_t v = 0; v < projections.size(); ++v) {
    const auto& proj = projections[v];
    const Partition& src = sources[v];
    if (proj.correspondence.size() != src.pixel_count()) throw InvalidArgument("missing correspondence");
    if (proj.width != p_ref.width() || proj.height != p_ref.height()) {
      throw InvalidArgument("projection raster differs from the reference partition");
    }
    std::vector<std::int32_t> labels(src.pixel_count());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::int32_t t = proj.correspondence[i];
      labels[i] = t >= 0 ? p_ref[static_cast<std::size_t>(t)] : base + src[i];
    }
    CodingPartition cp;
    cp.partition = connected_components(src.width(), src.height(), labels);
    const auto regions = static_cast<std::size_t>(cp.partition.region_count());
    cp.ref_labels.assign(regions, -1);
    cp.source_region.assign(regions, -1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto r = static_cast<std::size_t>(cp.partition[i]);
      if (labels[i] < base) {
        cp.ref_labels[r] = labels[i];
      } else {
        cp.source_region[r] = labels[i] - base;
      }
    }
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace pdmc
