#include "pdmc/pipeline.hpp"

#include <algorithm>
#include <map>

#include "omp_guard.hpp"
#include "pdmc/error.hpp"

namespace pdmc {

void EncoderConfig::validate() const {
  if (n_regs_color < 1 || n_regs_color > 65535) throw InvalidArgument("n_regs_color must be in [1, 65535]");
  if (n_regs_depth < 1) throw InvalidArgument("n_regs_depth must be positive");
  rate.validate();
  quant.validate();
  hierarchy.ransac.validate();
}

HierarchyConfig view_hierarchy_config(const EncoderConfig& cfg, const DepthMap& depth) {
  HierarchyConfig h = cfg.hierarchy;
  if (cfg.auto_ransac_threshold) h.ransac.inlier_threshold = 0.01 * (depth.max_z - depth.min_z);
  return h;
}

ViewLeaves view_leaves(const ViewBundle& view, const EncoderConfig& cfg, std::size_t view_index) {
  ViewLeaves l;
  l.lp_color = leaf_color_partition(view.color, cfg.n_regs_color);
  if (!cfg.depth_leaf_override.empty()) {
    if (view_index >= cfg.depth_leaf_override.size()) throw InvalidArgument("missing leaf partition override");
    l.lp_depth = cfg.depth_leaf_override[view_index];
    if (l.lp_depth.width() != view.depth.width || l.lp_depth.height() != view.depth.height) {
      throw InvalidArgument("leaf partition override has the wrong size");
    }
  } else {
    l.lp_depth = leaf_depth_partition(view.depth, view.camera, cfg.n_regs_depth);
  }
  l.p_cd = intersect(l.lp_color, l.lp_depth);
  return l;
}

RdHierarchy rd_hierarchy(const Partition& leaves, const ViewBundle& view, const Partition& lp_color,
                         const EncoderConfig& cfg) {
  RdHierarchy rd;
  rd.hierarchy = build_bpt(leaves, view.depth, view.camera, view_hierarchy_config(cfg, view.depth));
  rd.edges = leaf_edges(leaves, lp_color);
  rd.records = compute_records(rd.hierarchy.tree, rd.hierarchy.distortion, rd.edges, cfg.rate);
  return rd;
}

PreparedView prepare_view(const ViewBundle& view, const EncoderConfig& cfg, std::size_t view_index,
                          LeafMode mode) {
  cfg.validate();
  view.validate();
  PreparedView pv;
  pv.mode = mode;
  pv.leaves = view_leaves(view, cfg, view_index);
  const Partition& leaf = mode == LeafMode::kColorOnly  ? pv.leaves.lp_color
                          : mode == LeafMode::kDepthOnly ? pv.leaves.lp_depth
                                                         : pv.leaves.p_cd;
  pv.rd = rd_hierarchy(leaf, view, pv.leaves.lp_color, cfg);
  return pv;
}

namespace {

struct Selection {
  Cut cut;
  double lambda = 0.0;
};

Selection select_cut(const MergeTree& tree, std::span<const RdRecord> records, const RateTarget& target) {
  if (target.budget_bits) {
    auto r = lambda_search(tree, records, *target.budget_bits);
    return {std::move(r.cut), r.lambda};
  }
  return {opt_lambda(tree, records, target.lambda), target.lambda};
}

// Lambda of the first optimisation stage. Budget targets leave it at zero so
// the final stage alone meets the budget.
double stage_one_lambda(const RateTarget& target) { return target.budget_bits ? 0.0 : target.lambda; }

// World plane of every region of a partition produced by cut_to_partition.
std::vector<Plane3D> cut_region_planes(const Hierarchy& h, const Cut& cut, const Partition& p) {
  const auto owner = leaf_to_cut_index(h.tree, cut);
  std::vector<Plane3D> planes(static_cast<std::size_t>(p.region_count()));
  std::vector<std::uint8_t> seen(planes.size(), 0);
  for (std::size_t i = 0; i < p.pixel_count(); ++i) {
    const auto r = static_cast<std::size_t>(p[i]);
    if (seen[r]) continue;
    seen[r] = 1;
    const int node = cut.nodes[static_cast<std::size_t>(owner[static_cast<std::size_t>(h.leaves[i])])];
    planes[r] = h.planes[static_cast<std::size_t>(node)];
  }
  return planes;
}

CodingView independent_coding_view(const Hierarchy& h, const Cut& cut) {
  CodingView cv;
  cv.partition = cut_to_partition(h, cut);
  cv.planes = cut_region_planes(h, cut, cv.partition);
  cv.ref_labels.resize(cv.planes.size());
  for (std::size_t r = 0; r < cv.ref_labels.size(); ++r) cv.ref_labels[r] = static_cast<std::int32_t>(r);
  return cv;
}

std::vector<std::vector<std::int32_t>> region_pixels(const Partition& p) {
  std::vector<std::vector<std::int32_t>> out(static_cast<std::size_t>(p.region_count()));
  for (std::size_t i = 0; i < p.pixel_count(); ++i) out[static_cast<std::size_t>(p[i])].push_back(static_cast<std::int32_t>(i));
  return out;
}

double median_depth(std::span<const std::int32_t> pixels, const kernels::ViewGeometry& view) {
  std::vector<double> d;
  d.reserve(pixels.size());
  for (const auto p : pixels) d.push_back(view.depth[static_cast<std::size_t>(p)]);
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

struct IntraChoice {
  PlaneCode code;
  Plane3D plane;
};

// Candidate planes for an INTRA region, compared after quantization: the
// shared plane, a fit to the region's own pixels, and a fronto-parallel plane
// at the median depth. Ties keep the earlier candidate.
IntraChoice best_intra(const Plane3D& shared, std::span<const std::int32_t> pixels,
                       const kernels::ViewGeometry& geom, const HierarchyConfig& hcfg, std::size_t view,
                       std::size_t region, const QuantConfig& quant) {
  std::vector<Vec3> points;
  std::vector<double> depths;
  points.reserve(pixels.size());
  depths.reserve(pixels.size());
  for (const auto p : pixels) {
    points.push_back(geom.world_points[static_cast<std::size_t>(p)]);
    depths.push_back(geom.depth[static_cast<std::size_t>(p)]);
  }
  RansacConfig rc = hcfg.ransac;
  rc.rng_seed = hcfg.ransac.rng_seed * 0x9e3779b97f4a7c15ULL + (static_cast<std::uint64_t>(view + 1) << 40) + region;
  const Plane3D candidates[] = {
      shared,
      fit_region_plane(points, depths, geom.camera, rc, hcfg.ransac_min_pixels),
      to_world_frame(Plane3D::fronto_parallel(median_depth(pixels, geom)), geom.camera),
  };
  std::optional<IntraChoice> best;
  double best_sse = 0.0;
  for (const Plane3D& c : candidates) {
    PlaneCode code;
    try {
      code = quantize_plane(c, geom.camera, geom.min_z, geom.max_z, quant);
    } catch (const InvalidArgument&) {
      continue;
    }
    const Plane3D plane = dequantize_plane(code, geom.camera, geom.min_z, geom.max_z, quant);
    const double sse = kernels::region_sse(plane, pixels, geom);
    if (!best || sse < best_sse) {
      best = IntraChoice{code, plane};
      best_sse = sse;
    }
  }
  return *best;
}

void check_calibration(const Camera& camera, double min_z, double max_z) {
  camera.validate();
  if (!(min_z > 0.0) || !(max_z > min_z)) throw InvalidArgument("invalid depth range");
}

DepthMap render_depth(const Partition& p, std::span<const Plane3D> planes, const Camera& camera, double min_z,
                      double max_z) {
  DepthMap d(p.width(), p.height(), min_z, max_z);
  kernels::render_planes_parallel(p.labels(), planes, camera, min_z, max_z, d.values, p.width());
  return d;
}

}  // namespace

EncodeResult encode_coding_views(std::span<const ViewBundle> views, std::span<const Partition> lp_colors,
                                 std::span<const CodingView> coding, const EncoderConfig& cfg, double lambda,
                                 int ref_view) {
  cfg.validate();
  if (views.empty() || views.size() != lp_colors.size() || views.size() != coding.size()) {
    throw InvalidArgument("views, colour partitions and coding partitions must be indexed alike");
  }
  EncodeResult res;
  res.lambda = lambda;
  res.header.n_views = static_cast<int>(views.size());
  res.header.n_regs_color = cfg.n_regs_color;
  res.header.quant = cfg.quant;
  res.header.width = views.front().depth.width;
  res.header.height = views.front().depth.height;
  res.header.ref_view = ref_view;
  if (ref_view < 0 || ref_view >= res.header.n_views) throw InvalidArgument("reference view index out of range");

  std::map<std::int32_t, Plane3D> last_intra;
  res.sections.resize(views.size());
  res.views.resize(views.size());
  for (const int vi : view_coding_order(res.header.n_views, ref_view)) {
    const auto v = static_cast<std::size_t>(vi);
    const ViewBundle& view = views[v];
    const Partition& lp = lp_colors[v];
    const CodingView& cv = coding[v];
    if (view.depth.width != res.header.width || view.depth.height != res.header.height) {
      throw InvalidArgument("all views must share one raster size");
    }
    if (cv.ref_labels.size() != static_cast<std::size_t>(cv.partition.region_count()) ||
        cv.planes.size() != cv.ref_labels.size()) {
      throw InvalidArgument("coding view needs one ref label and plane per region");
    }
    const kernels::ViewGeometry geom(view.depth, view.camera);
    const HierarchyConfig hcfg = view_hierarchy_config(cfg, view.depth);

    const auto flags = active_flags(cv.partition, lp);
    const auto added = added_depth_elements(cv.partition, lp);
    ViewReconstruction rec;
    rec.lp_color = lp;
    rec.partition = reconstruct_partition(lp, flags, added);
    rec.added_depth_elements = added.size();

    const auto n_regions = static_cast<std::size_t>(rec.partition.region_count());
    const auto pixels = region_pixels(rec.partition);
    std::vector<Plane3D> source_plane(n_regions);
    rec.texture.ref_labels.resize(n_regions);
    rec.texture.codes.resize(n_regions);
    rec.planes.resize(n_regions);
    for (std::size_t r = 0; r < n_regions; ++r) {
      const auto parent = static_cast<std::size_t>(cv.partition[static_cast<std::size_t>(pixels[r].front())]);
      rec.texture.ref_labels[r] = cv.ref_labels[parent];
      source_plane[r] = cv.planes[parent];
    }

    std::map<std::int32_t, Plane3D> pending;
    for (const int region : coding_order(rec.texture.ref_labels)) {
      const auto r = static_cast<std::size_t>(region);
      const IntraChoice ic = best_intra(source_plane[r], pixels[r], geom, hcfg, v, r, cfg.quant);
      const PlaneCode& code = ic.code;
      const Plane3D& intra = ic.plane;
      const std::int32_t ref = rec.texture.ref_labels[r];
      std::optional<Plane3D> predicted;
      if (ref >= 0) {
        if (auto it = last_intra.find(ref); it != last_intra.end()) predicted = it->second;
      }
      const ModeDecision m = choose_mode(pixels[r], geom, intra, predicted, lambda, cfg.quant);
      if (m.mode == PlaneMode::kSkip) {
        rec.texture.codes[r] = PlaneCode{0, 0, 0, PlaneMode::kSkip};
        rec.planes[r] = *predicted;
      } else {
        rec.texture.codes[r] = code;
        rec.planes[r] = intra;
        if (ref >= 0) pending[ref] = intra;
      }
    }
    for (const auto& [ref, plane] : pending) last_intra[ref] = plane;

    rec.depth = render_depth(rec.partition, rec.planes, view.camera, view.depth.min_z, view.depth.max_z);

    ViewSections s;
    s.chains = encode_chains(added, res.header.width, res.header.height);
    s.active = encode_active_boundaries(rec.partition, lp);
    s.texture = encode_texture(rec.texture, cfg.quant);
    res.sections[v] = std::move(s);
    res.views[v] = std::move(rec);
  }
  res.stream = serialize_stream(res.header, res.sections);
  return res;
}

EncodeResult encode_single_view(const ViewBundle& view, const EncoderConfig& cfg, const RateTarget& target) {
  return encode_single_view(view, prepare_view(view, cfg, 0), cfg, target);
}

EncodeResult encode_single_view(const ViewBundle& view, const PreparedView& prepared, const EncoderConfig& cfg,
                                const RateTarget& target) {
  if (prepared.mode != LeafMode::kColorPlusDepth) throw InvalidArgument("single-view path needs the colour+depth hierarchy");
  const RdHierarchy& h_cd = prepared.rd;
  const Cut cut1 = opt_lambda(h_cd.hierarchy.tree, h_cd.records, stage_one_lambda(target));
  const Partition p1 = cut_to_partition(h_cd.hierarchy, cut1);

  const RdHierarchy h1 = rd_hierarchy(p1, view, prepared.leaves.lp_color, cfg);
  const Selection sel = select_cut(h1.hierarchy.tree, h1.records, target);
  const CodingView cv = independent_coding_view(h1.hierarchy, sel.cut);
  EncodeResult res = encode_coding_views(std::span(&view, 1), std::span(&prepared.leaves.lp_color, 1),
                                         std::span(&cv, 1), cfg, sel.lambda);
  res.model_rate = cut_rate(h1.records, sel.cut);
  res.ref_view = 0;
  return res;
}

EncodeResult encode_multiview(std::span<const ViewBundle> views, const EncoderConfig& cfg,
                              const RateTarget& target) {
  std::vector<PreparedView> prepared;
  for (std::size_t v = 0; v < views.size(); ++v) prepared.push_back(prepare_view(views[v], cfg, v));
  return encode_multiview(views, prepared, cfg, target);
}

EncodeResult encode_multiview(std::span<const ViewBundle> views, std::span<const PreparedView> prepared,
                              const EncoderConfig& cfg, const RateTarget& target) {
  cfg.validate();
  const std::size_t n = views.size();
  if (n == 0 || prepared.size() != n) throw InvalidArgument("one prepared view per input view is required");
  const int ref = cfg.ref_view < 0 ? static_cast<int>(n / 2) : cfg.ref_view;
  if (ref >= static_cast<int>(n)) throw InvalidArgument("reference view index out of range");
  const ViewBundle& ref_view = views[static_cast<std::size_t>(ref)];

  std::vector<Partition> lp_colors;
  std::vector<Partition> optimal;
  std::vector<ProjectedPartition> projections;
  for (std::size_t v = 0; v < n; ++v) {
    if (prepared[v].mode != LeafMode::kColorPlusDepth) throw InvalidArgument("multiview path needs colour+depth hierarchies");
    const RdHierarchy& h = prepared[v].rd;
    const Cut cut = opt_lambda(h.hierarchy.tree, h.records, stage_one_lambda(target));
    optimal.push_back(cut_to_partition(h.hierarchy, cut));
    lp_colors.push_back(prepared[v].leaves.lp_color);
  }
  projections.resize(n);
  detail::parallel_for(static_cast<long long>(n), [&](long long i) {
    const auto v = static_cast<std::size_t>(i);
    projections[v] = project_partition(optimal[v], views[v].depth, views[v].camera, ref_view.camera,
                                       ref_view.depth.width, ref_view.depth.height, &ref_view.depth);
  });
  const Partition p_ref_ini = accumulate(projections);
  const HierarchyConfig hcfg = view_hierarchy_config(cfg, ref_view.depth);
  const Hierarchy h_ref = build_bpt(p_ref_ini, ref_view.depth, ref_view.camera, hcfg);
  for (std::size_t v = 0; v < n; ++v) {
    if (static_cast<int>(v) != ref) snap_correspondence(projections[v], h_ref.leaves, prepared[v].leaves.p_cd);
  }
  const MultiViewHierarchy mv = multiview_records(h_ref, views, lp_colors, projections, hcfg, cfg.rate);

  const Selection sel = select_cut(mv.hierarchy.tree, mv.records, target);
  const Partition p_ref = cut_to_partition(mv.hierarchy, sel.cut);
  const std::vector<Plane3D> ref_planes = cut_region_planes(mv.hierarchy, sel.cut, p_ref);
  const auto back = backproject_coding_partitions(p_ref, projections, optimal);

  std::vector<CodingView> coding(n);
  for (std::size_t v = 0; v < n; ++v) {
    CodingView& cv = coding[v];
    cv.partition = back[v].partition;
    cv.ref_labels = back[v].ref_labels;
    cv.planes.resize(cv.ref_labels.size());
    const auto pixels = region_pixels(cv.partition);
    const HierarchyConfig vcfg = view_hierarchy_config(cfg, views[v].depth);
    const kernels::ViewGeometry geom(views[v].depth, views[v].camera);
    for (std::size_t r = 0; r < cv.planes.size(); ++r) {
      if (cv.ref_labels[r] >= 0) {
        cv.planes[r] = ref_planes[static_cast<std::size_t>(cv.ref_labels[r])];
        continue;
      }
      std::vector<Vec3> points;
      std::vector<double> depths;
      for (const auto p : pixels[r]) {
        points.push_back(geom.world_points[static_cast<std::size_t>(p)]);
        depths.push_back(geom.depth[static_cast<std::size_t>(p)]);
      }
      RansacConfig rc = vcfg.ransac;
      rc.rng_seed = vcfg.ransac.rng_seed * 0x9e3779b97f4a7c15ULL + (static_cast<std::uint64_t>(v + 1) << 32) + r;
      cv.planes[r] = fit_region_plane(points, depths, views[v].camera, rc, vcfg.ransac_min_pixels);
    }
  }
  EncodeResult res = encode_coding_views(views, lp_colors, coding, cfg, sel.lambda, ref);
  res.model_rate = cut_rate(mv.records, sel.cut);
  res.ref_view = ref;
  return res;
}

EncodeResult encode_leaf_mode(const ViewBundle& view, LeafMode mode, const EncoderConfig& cfg,
                              const RateTarget& target) {
  return encode_leaf_mode(view, prepare_view(view, cfg, 0, mode), cfg, target);
}

EncodeResult encode_leaf_mode(const ViewBundle& view, const PreparedView& prepared, const EncoderConfig& cfg,
                              const RateTarget& target) {
  const RdHierarchy& h = prepared.rd;
  const Selection sel = select_cut(h.hierarchy.tree, h.records, target);
  const CodingView cv = independent_coding_view(h.hierarchy, sel.cut);
  EncodeResult res = encode_coding_views(std::span(&view, 1), std::span(&prepared.leaves.lp_color, 1),
                                         std::span(&cv, 1), cfg, sel.lambda);
  res.model_rate = cut_rate(h.records, sel.cut);
  return res;
}

EncodeResult encode_merging_sequence(const ViewBundle& view, int k, const EncoderConfig& cfg) {
  return encode_merging_sequence(view, prepare_view(view, cfg, 0), k, cfg);
}

EncodeResult encode_merging_sequence(const ViewBundle& view, const PreparedView& prepared, int k,
                                     const EncoderConfig& cfg) {
  const RdHierarchy& h = prepared.rd;
  const int regions = std::clamp(k, 1, h.hierarchy.leaf_count());
  const Cut cut = cut_at_nodes(h.hierarchy.tree, regions);
  const CodingView cv = independent_coding_view(h.hierarchy, cut);
  EncodeResult res = encode_coding_views(std::span(&view, 1), std::span(&prepared.leaves.lp_color, 1),
                                         std::span(&cv, 1), cfg, 0.0);
  res.model_rate = cut_rate(h.records, cut);
  return res;
}

DecodeResult decode(std::span<const std::uint8_t> stream, std::span<const ColorImage> colors,
                    std::span<const ViewCalibration> calibrations) {
  const ParsedStream ps = parse_stream(stream);
  const auto n = static_cast<std::size_t>(ps.header.n_views);
  if (colors.size() != n || calibrations.size() != n) {
    throw InvalidArgument("one colour image and calibration per coded view is required");
  }
  DecodeResult out;
  out.header = ps.header;
  out.views.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (colors[v].width != ps.header.width || colors[v].height != ps.header.height) {
      throw InvalidArgument("colour image size differs from the stream");
    }
    check_calibration(calibrations[v].camera, calibrations[v].min_z, calibrations[v].max_z);
  }
  // Partitions are independent per view; plane prediction follows the coding order.
  detail::parallel_for(static_cast<long long>(n), [&](long long v) {
    out.views[static_cast<std::size_t>(v)].lp_color =
        leaf_color_partition(colors[static_cast<std::size_t>(v)], ps.header.n_regs_color);
  });
  std::map<std::int32_t, Plane3D> last_intra;
  for (const int vi : view_coding_order(ps.header.n_views, ps.header.ref_view)) {
    const auto v = static_cast<std::size_t>(vi);
    ViewReconstruction& rec = out.views[v];
    const ViewCalibration& cal = calibrations[v];
    const auto active = decode_active_boundaries(ps.views[v].active, rec.lp_color);
    const auto elements = decode_depth_contours(ps.views[v].chains, rec.lp_color);
    rec.added_depth_elements = elements.size();
    rec.partition = reconstruct_partition(rec.lp_color, active, elements);
    rec.texture = decode_texture(ps.views[v].texture, ps.header.quant);
    const auto n_regions = static_cast<std::size_t>(rec.partition.region_count());
    if (rec.texture.codes.size() != n_regions) throw DecodeError("region count disagrees with the colour partition");
    rec.planes.resize(n_regions);
    std::map<std::int32_t, Plane3D> pending;
    for (const int region : coding_order(rec.texture.ref_labels)) {
      const auto r = static_cast<std::size_t>(region);
      const PlaneCode& code = rec.texture.codes[r];
      const std::int32_t ref = rec.texture.ref_labels[r];
      if (code.mode == PlaneMode::kSkip) {
        const auto it = ref >= 0 ? last_intra.find(ref) : last_intra.end();
        if (it == last_intra.end()) throw DecodeError("SKIP region without a prediction");
        rec.planes[r] = it->second;
      } else {
        rec.planes[r] = dequantize_plane(code, cal.camera, cal.min_z, cal.max_z, ps.header.quant);
        if (ref >= 0) pending[ref] = rec.planes[r];
      }
    }
    for (const auto& [ref, plane] : pending) last_intra[ref] = plane;
    rec.depth = render_depth(rec.partition, rec.planes, cal.camera, cal.min_z, cal.max_z);
  }
  return out;
}

}  // namespace pdmc
