#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "pdmc/error.hpp"
#include "pdmc/multiview.hpp"
#include "pdmc/pipeline.hpp"
#include "support.hpp"

using namespace pdmc;

namespace {

// Camera with focal 20 px whose centre sits at world x = `x`.
Camera strip_camera(double x, int width, int height) {
  Camera c;
  c.fx = c.fy = 20.0;
  c.cx = width / 2.0;
  c.cy = height / 2.0;
  c.translation = Vec3(-x, 0.0, 0.0);
  return c;
}

struct Strips {
  DepthMap depth;
  Partition partition;
};

// Vertical strips [start, next start) with one depth each.
Strips make_strips(int width, int height, const std::vector<std::pair<int, double>>& strips) {
  Strips s{DepthMap(width, height, 1.0, 8.0), {}};
  std::vector<std::int32_t> labels(static_cast<std::size_t>(width * height));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      int k = 0;
      while (k + 1 < static_cast<int>(strips.size()) && c >= strips[static_cast<std::size_t>(k + 1)].first) ++k;
      s.depth.at(r, c) = static_cast<float>(strips[static_cast<std::size_t>(k)].second);
      labels[static_cast<std::size_t>(r * width + c)] = k;
    }
  }
  s.partition = connected_components(width, height, labels);
  return s;
}

struct Front {
  std::vector<ViewBundle> views;
  std::vector<PreparedView> prepared;
  std::vector<Partition> optimal;
  std::vector<Partition> lp_colors;
  std::vector<ProjectedPartition> projections;
  Hierarchy h_ref;
  HierarchyConfig hcfg;
  EncoderConfig cfg;
  int ref = 0;
};

Front run_front(const SceneSpec& spec, double lambda) {
  Front f;
  f.views = generate_scene(spec);
  f.cfg.n_regs_color = 80;
  f.cfg.n_regs_depth = 80;
  f.ref = static_cast<int>(f.views.size() / 2);
  const ViewBundle& ref = f.views[static_cast<std::size_t>(f.ref)];
  for (std::size_t v = 0; v < f.views.size(); ++v) {
    f.prepared.push_back(prepare_view(f.views[v], f.cfg, v));
    const auto& h = f.prepared.back().rd;
    f.optimal.push_back(cut_to_partition(h.hierarchy, opt_lambda(h.hierarchy.tree, h.records, lambda)));
    f.lp_colors.push_back(f.prepared.back().leaves.lp_color);
    f.projections.push_back(project_partition(f.optimal.back(), f.views[v].depth, f.views[v].camera, ref.camera,
                                              ref.depth.width, ref.depth.height, &ref.depth));
  }
  f.hcfg = view_hierarchy_config(f.cfg, ref.depth);
  f.h_ref = build_bpt(accumulate(f.projections), ref.depth, ref.camera, f.hcfg);
  return f;
}

}  // namespace

TEST_CASE("projection into the same camera is the identity") {
  const auto views = generate_scene(testing::small_spec(48, 36, 1, 2));
  const Partition p = leaf_color_partition(views[0].color, 30);
  const ProjectedPartition proj = project_partition(p, views[0].depth, views[0].camera, views[0].camera);
  CHECK(std::equal(proj.labels.begin(), proj.labels.end(), p.labels().begin()));
  CHECK(std::count(proj.occluded.begin(), proj.occluded.end(), 1) == 0);
  CHECK(proj.projected_counts == proj.source_counts);
  for (std::size_t i = 0; i < proj.correspondence.size(); ++i) CHECK(proj.correspondence[i] == static_cast<std::int32_t>(i));
}

TEST_CASE("a region hidden behind a nearer plane is occluded") {
  // Disparity is 20 * 1 / z: 10 px for the front strips, 3.3 px for the back strip.
  const Strips s = make_strips(60, 6, {{0, 2.0}, {30, 6.0}, {34, 2.0}});
  const Camera src = strip_camera(1.0, 60, 6);
  const Camera ref = strip_camera(0.0, 60, 6);
  const ProjectedPartition proj = project_partition(s.partition, s.depth, src, ref, 60, 6);
  REQUIRE(proj.occluded.size() == 3);
  CHECK(proj.occluded[0] == 0);
  CHECK(proj.occluded[1] == 1);
  CHECK(proj.occluded[2] == 0);
  CHECK(std::count(proj.labels.begin(), proj.labels.end(), 1) < static_cast<long>(proj.source_counts[1]) / 2);
  for (std::size_t i = 0; i < proj.correspondence.size(); ++i) {
    if (s.partition[i] == 1) CHECK(proj.correspondence[i] == -1);
  }
}

TEST_CASE("fronto-parallel shift keeps fully visible regions at their size") {
  // Depth 4 gives a disparity of exactly 5 px.
  const Strips s = make_strips(40, 5, {{0, 4.0}, {10, 4.0}, {20, 4.0}});
  const Camera src = strip_camera(1.0, 40, 5);
  const Camera ref = strip_camera(0.0, 40, 5);
  const ProjectedPartition proj = project_partition(s.partition, s.depth, src, ref, 40, 5);
  CHECK(proj.projected_counts[0] == proj.source_counts[0]);
  CHECK(proj.projected_counts[1] == proj.source_counts[1]);
  CHECK(proj.projected_counts[2] == 75);  // five columns leave the frame
  CHECK(proj.labels[5] == 0);
  CHECK(proj.labels[4] == -1);
}

TEST_CASE("reference depth test hides pixels behind the reference surface") {
  const Strips s = make_strips(40, 4, {{0, 6.0}});
  const Strips ref_scene = make_strips(40, 4, {{0, 6.0}, {10, 2.0}, {20, 6.0}});
  const Camera cam = strip_camera(0.0, 40, 4);
  const ProjectedPartition plain = project_partition(s.partition, s.depth, cam, cam, 40, 4);
  const ProjectedPartition tested = project_partition(s.partition, s.depth, cam, cam, 40, 4, &ref_scene.depth);
  CHECK(plain.projected_counts[0] == 160);
  CHECK(tested.projected_counts[0] == 120);
}

TEST_CASE("fill_nearest assigns the closest labelled pixel") {
  const std::vector<std::int32_t> in{-1, 3, -1, -1,
                                     -1, -1, -1, 5};
  const auto out = fill_nearest(in, 4, 2);
  CHECK(out == std::vector<std::int32_t>{3, 3, 3, 5,
                                         3, 3, 5, 5});
  const std::vector<std::int32_t> tie{1, -1, 2};
  CHECK(fill_nearest(tie, 3, 1)[1] == 1);
}

TEST_CASE("accumulating one or two identical projections reproduces the partition") {
  const auto views = generate_scene(testing::small_spec(48, 36, 1, 4));
  const Partition p = leaf_color_partition(views[0].color, 20);
  const ProjectedPartition proj = project_partition(p, views[0].depth, views[0].camera, views[0].camera);
  CHECK(accumulate(std::vector<ProjectedPartition>{proj}) == p);
  CHECK(accumulate(std::vector<ProjectedPartition>{proj, proj}) == p);
}

TEST_CASE("accumulated partition covers the reference view and refines every projection") {
  const Front f = run_front(testing::small_spec(96, 72, 3, 7), 0.1);
  const Partition& acc = f.h_ref.leaves;
  REQUIRE(acc.pixel_count() == 96u * 72u);
  std::size_t max_regions = 0;
  for (const auto& proj : f.projections) {
    std::set<std::int32_t> present(proj.labels.begin(), proj.labels.end());
    present.erase(-1);
    max_regions = std::max(max_regions, present.size());
    std::map<std::int32_t, std::int32_t> owner;
    for (std::size_t i = 0; i < proj.labels.size(); ++i) {
      if (proj.labels[i] < 0) continue;
      const auto [it, inserted] = owner.emplace(acc[i], proj.labels[i]);
      CHECK(it->second == proj.labels[i]);
    }
  }
  CHECK(static_cast<std::size_t>(acc.region_count()) >= max_regions);
}

TEST_CASE("multiview records with one view equal single-view records") {
  const auto views = generate_scene(testing::small_spec(64, 48, 1, 3));
  EncoderConfig cfg;
  cfg.n_regs_color = 60;
  cfg.n_regs_depth = 60;
  const PreparedView pv = prepare_view(views[0], cfg, 0);
  const Partition& leaves = pv.leaves.p_cd;
  const RdHierarchy single = rd_hierarchy(leaves, views[0], pv.leaves.lp_color, cfg);
  const HierarchyConfig hcfg = view_hierarchy_config(cfg, views[0].depth);
  const ProjectedPartition proj = project_partition(leaves, views[0].depth, views[0].camera, views[0].camera);
  const MultiViewHierarchy mv = multiview_records(single.hierarchy, views, std::vector<Partition>{pv.leaves.lp_color},
                                                  std::vector<ProjectedPartition>{proj}, hcfg, cfg.rate);
  REQUIRE(mv.records.size() == single.records.size());
  for (std::size_t k = 0; k < mv.records.size(); ++k) {
    CHECK(mv.records[k].distortion == doctest::Approx(single.records[k].distortion));
    CHECK(mv.records[k].rate_contour == doctest::Approx(single.records[k].rate_contour));
    CHECK(mv.records[k].rate_texture == single.records[k].rate_texture);
  }
}

TEST_CASE("multiview records sum over views and charge the texture once") {
  const Front f = run_front(testing::small_spec(96, 72, 3, 5), 0.1);
  const MultiViewHierarchy mv = multiview_records(f.h_ref, f.views, f.lp_colors, f.projections, f.hcfg, f.cfg.rate);
  REQUIRE(mv.nodes.size() == static_cast<std::size_t>(f.h_ref.tree.node_count()));
  for (std::size_t k = 0; k < mv.nodes.size(); ++k) {
    const auto& n = mv.nodes[k];
    REQUIRE(n.view_distortion.size() == 3);
    double d = 0.0;
    std::int64_t depth_el = 0;
    std::int64_t color_el = 0;
    for (std::size_t v = 0; v < 3; ++v) {
      d += n.view_distortion[v];
      depth_el += n.view_boundary[v].depth_elements;
      color_el += n.view_boundary[v].color_elements;
    }
    CHECK(n.distortion == doctest::Approx(d));
    CHECK(n.boundary.depth_elements == depth_el);
    CHECK(n.boundary.color_elements == color_el);
    CHECK(mv.records[k].distortion == doctest::Approx(n.distortion));
    CHECK(mv.records[k].rate_texture == f.cfg.rate.r_texture);
  }
}

TEST_CASE("a single noiseless plane gives zero distortion increments in every view") {
  SceneSpec spec = testing::small_spec(64, 48, 3, 2);
  spec.plane_count = 1;
  const Front f = run_front(spec, 0.0);
  const MultiViewHierarchy mv = multiview_records(f.h_ref, f.views, f.lp_colors, f.projections, f.hcfg, f.cfg.rate);
  for (const auto& n : mv.nodes) {
    for (double d : n.view_distortion) CHECK(d == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("snapping gives each vote region one reference leaf") {
  const Front f = run_front(testing::small_spec(96, 72, 3, 8), 0.1);
  ProjectedPartition proj = f.projections[0];
  const Partition& vote = f.prepared[0].leaves.p_cd;
  snap_correspondence(proj, f.h_ref.leaves, vote);
  std::map<std::int32_t, std::int32_t> leaf_of;
  for (std::size_t i = 0; i < proj.correspondence.size(); ++i) {
    if (proj.correspondence[i] < 0) continue;
    const std::int32_t leaf = f.h_ref.leaves[static_cast<std::size_t>(proj.correspondence[i])];
    const auto [it, inserted] = leaf_of.emplace(vote[i], leaf);
    CHECK(it->second == leaf);
  }
}

TEST_CASE("back-projection is consistent across nested cuts") {
  const Front f = run_front(testing::small_spec(96, 72, 3, 6), 0.1);
  const MergeTree& tree = f.h_ref.tree;
  const auto fine_cut = leaves_cut(tree);
  const auto coarse_cut = cut_at_nodes(tree, std::max(1, tree.leaf_count() / 3));
  const Partition fine = cut_to_partition(f.h_ref, fine_cut);
  const Partition coarse = cut_to_partition(f.h_ref, coarse_cut);
  const auto a = backproject_coding_partitions(fine, f.projections, f.optimal);
  const auto b = backproject_coding_partitions(coarse, f.projections, f.optimal);
  REQUIRE(a.size() == 3);
  CHECK(a[static_cast<std::size_t>(f.ref)].partition == fine);
  CHECK(b[static_cast<std::size_t>(f.ref)].partition == coarse);
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(refines(a[v].partition, b[v].partition));
    // Occluded source regions keep their own labels whatever the cut.
    for (std::size_t i = 0; i < f.projections[v].correspondence.size(); ++i) {
      if (f.projections[v].correspondence[i] >= 0) continue;
      const auto ra = static_cast<std::size_t>(a[v].partition[i]);
      const auto rb = static_cast<std::size_t>(b[v].partition[i]);
      CHECK(a[v].ref_labels[ra] == -1);
      CHECK(b[v].ref_labels[rb] == -1);
      CHECK(a[v].source_region[ra] == b[v].source_region[rb]);
    }
    // Regions sharing a ref label in the fine cut share one in the coarse cut.
    std::map<std::int32_t, std::int32_t> coarse_of;
    for (std::size_t i = 0; i < a[v].partition.pixel_count(); ++i) {
      const std::int32_t la = a[v].ref_labels[static_cast<std::size_t>(a[v].partition[i])];
      const std::int32_t lb = b[v].ref_labels[static_cast<std::size_t>(b[v].partition[i])];
      if (la < 0) continue;
      const auto [it, inserted] = coarse_of.emplace(la, lb);
      CHECK(it->second == lb);
    }
  }
}

TEST_CASE("back-projection validates its inputs") {
  const Front f = run_front(testing::small_spec(48, 36, 2, 1), 1.0);
  const Partition p = cut_to_partition(f.h_ref, root_cut(f.h_ref.tree));
  CHECK_THROWS_AS(backproject_coding_partitions(p, f.projections, std::vector<Partition>{f.optimal[0]}),
                  InvalidArgument);
}
