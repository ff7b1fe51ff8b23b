#include "pdmc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

#include "omp_guard.hpp"
#include "pdmc/error.hpp"

namespace pdmc {

double mse(const DepthMap& a, const DepthMap& b) {
  if (a.width != b.width || a.height != b.height) throw InvalidArgument("depth maps differ in size");
  if (a.size() == 0) throw InvalidArgument("empty depth map");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    s += e * e;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const DepthMap& a, const DepthMap& b, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("PSNR peak must be positive");
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

double psnr(const DepthMap& a, const DepthMap& b) { return psnr(a, b, a.max_z - a.min_z); }

namespace {

Eigen::Vector4d cubic_fit(const std::vector<double>& x, const std::vector<double>& y) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 4);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = 1.0;
    a(r, 1) = x[i];
    a(r, 2) = x[i] * x[i];
    a(r, 3) = x[i] * x[i] * x[i];
    b(r) = y[i];
  }
  return a.colPivHouseholderQr().solve(b);
}

double integral(const Eigen::Vector4d& p, double lo, double hi) {
  const auto prim = [&](double x) {
    return p(0) * x + p(1) * x * x / 2.0 + p(2) * x * x * x / 3.0 + p(3) * x * x * x * x / 4.0;
  };
  return prim(hi) - prim(lo);
}

struct Axes {
  std::vector<double> log_rate;
  std::vector<double> psnr;
};

Axes axes_of(const RdCurve& c) {
  if (c.size() < 4) throw InvalidArgument("Bjontegaard metrics need at least 4 points per curve");
  Axes a;
  for (const RdPoint& p : c) {
    if (!(p.rate_bits > 0.0) || !std::isfinite(p.psnr_db)) throw InvalidArgument("curve points need positive rate and finite PSNR");
    a.log_rate.push_back(std::log10(p.rate_bits));
    a.psnr.push_back(p.psnr_db);
  }
  return a;
}

}  // namespace

BdResult bd_metrics(const RdCurve& test, const RdCurve& reference) {
  const Axes t = axes_of(test);
  const Axes r = axes_of(reference);
  BdResult out;

  const double lo_r = std::max(*std::min_element(t.log_rate.begin(), t.log_rate.end()),
                               *std::min_element(r.log_rate.begin(), r.log_rate.end()));
  const double hi_r = std::min(*std::max_element(t.log_rate.begin(), t.log_rate.end()),
                               *std::max_element(r.log_rate.begin(), r.log_rate.end()));
  if (!(hi_r > lo_r)) throw InvalidArgument("curves do not overlap in rate");
  const auto pt = cubic_fit(t.log_rate, t.psnr);
  const auto pr = cubic_fit(r.log_rate, r.psnr);
  out.bd_snr_db = (integral(pt, lo_r, hi_r) - integral(pr, lo_r, hi_r)) / (hi_r - lo_r);

  const double lo_q = std::max(*std::min_element(t.psnr.begin(), t.psnr.end()),
                               *std::min_element(r.psnr.begin(), r.psnr.end()));
  const double hi_q = std::min(*std::max_element(t.psnr.begin(), t.psnr.end()),
                               *std::max_element(r.psnr.begin(), r.psnr.end()));
  if (!(hi_q > lo_q)) throw InvalidArgument("curves do not overlap in PSNR");
  const auto qt = cubic_fit(t.psnr, t.log_rate);
  const auto qr = cubic_fit(r.psnr, r.log_rate);
  const double avg = (integral(qt, lo_q, hi_q) - integral(qr, lo_q, hi_q)) / (hi_q - lo_q);
  out.bd_rate_percent = (std::pow(10.0, avg) - 1.0) * 100.0;
  return out;
}

RdCurve hull_filter(const RdCurve& curve) {
  RdCurve pts = curve;
  std::sort(pts.begin(), pts.end(), [](const RdPoint& a, const RdPoint& b) {
    return a.rate_bits != b.rate_bits ? a.rate_bits < b.rate_bits : a.mse < b.mse;
  });
  RdCurve frontier;
  for (const RdPoint& p : pts) {
    if (frontier.empty() || p.mse < frontier.back().mse) {
      if (!frontier.empty() && p.rate_bits == frontier.back().rate_bits) continue;
      frontier.push_back(p);
    }
  }
  RdCurve hull;
  for (const RdPoint& c : frontier) {
    while (hull.size() >= 2) {
      const RdPoint& a = hull[hull.size() - 2];
      const RdPoint& b = hull.back();
      const double cross = (b.rate_bits - a.rate_bits) * (c.mse - a.mse) - (b.mse - a.mse) * (c.rate_bits - a.rate_bits);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(c);
  }
  return hull;
}

ColorImage render_virtual_view(const ColorImage& color, const DepthMap& depth, const Camera& cam_src,
                               const Camera& cam_dst) {
  if (color.width != depth.width || color.height != depth.height) {
    throw InvalidArgument("colour and depth differ in size");
  }
  const int w = color.width;
  const int h = color.height;
  std::vector<kernels::WarpTarget> targets(color.size());
  kernels::warp_parallel(depth, cam_src, cam_dst, w, h, targets);
  std::vector<double> zbuf(color.size(), std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> owner(color.size(), -1);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    if (t.index >= 0 && t.depth < zbuf[static_cast<std::size_t>(t.index)]) {
      zbuf[static_cast<std::size_t>(t.index)] = t.depth;
      owner[static_cast<std::size_t>(t.index)] = static_cast<std::int32_t>(i);
    }
  }
  ColorImage out(w, h);
  std::vector<std::uint8_t> filled_row(static_cast<std::size_t>(h), 0);
  for (int r = 0; r < h; ++r) {
    std::vector<int> valid;
    for (int c = 0; c < w; ++c) {
      if (owner[static_cast<std::size_t>(r) * w + c] >= 0) valid.push_back(c);
    }
    if (valid.empty()) continue;
    filled_row[static_cast<std::size_t>(r)] = 1;
    std::size_t k = 0;
    for (int c = 0; c < w; ++c) {
      while (k + 1 < valid.size() && valid[k + 1] <= c) ++k;
      int src_c = valid[k];
      if (src_c < c && k + 1 < valid.size() && valid[k + 1] - c < c - src_c) src_c = valid[k + 1];
      const auto o = owner[static_cast<std::size_t>(r) * w + src_c];
      out.at(r, c) = color.values[static_cast<std::size_t>(o)];
    }
  }
  // Rows without any warped pixel copy the nearest filled row, upper first.
  for (int r = 0; r < h; ++r) {
    if (filled_row[static_cast<std::size_t>(r)]) continue;
    for (int d = 1; d < h; ++d) {
      const int up = r - d;
      const int down = r + d;
      const int src = (up >= 0 && filled_row[static_cast<std::size_t>(up)]) ? up
                      : (down < h && filled_row[static_cast<std::size_t>(down)]) ? down
                                                                                : -1;
      if (src < 0) continue;
      for (int c = 0; c < w; ++c) out.at(r, c) = out.at(src, c);
      break;
    }
  }
  return out;
}

RateBreakdown rate_breakdown(std::span<const std::uint8_t> stream) {
  const ParsedStream ps = parse_stream(stream);
  RateBreakdown b;
  b.header = kHeaderBytes;
  b.framing = kTrailerBytes + ps.views.size() * 3 * kSectionPrefixBytes;
  for (const ViewSections& v : ps.views) {
    b.views.push_back({v.chains.size(), v.active.size(), v.texture.size()});
    b.chains += v.chains.size();
    b.active += v.active.size();
    b.texture += v.texture.size();
  }
  b.total = b.header + b.framing + b.chains + b.active + b.texture;
  return b;
}

void print_breakdown(std::ostream& out, const RateBreakdown& b) {
  const auto share = [&](std::size_t x) { return b.total ? static_cast<double>(x) / static_cast<double>(b.total) : 0.0; };
  out << "section,bytes,share\n";
  out << "header," << b.header << ',' << share(b.header) << '\n';
  out << "framing," << b.framing << ',' << share(b.framing) << '\n';
  out << "partition," << b.chains << ',' << share(b.chains) << '\n';
  out << "active," << b.active << ',' << share(b.active) << '\n';
  out << "texture," << b.texture << ',' << share(b.texture) << '\n';
  out << "total," << b.total << ",1\n";
  for (std::size_t v = 0; v < b.views.size(); ++v) {
    out << "view" << v << ".partition," << b.views[v].chains << '\n';
    out << "view" << v << ".active," << b.views[v].active << '\n';
    out << "view" << v << ".texture," << b.views[v].texture << '\n';
  }
}

std::string mode_name(const SweepConfig& cfg) {
  switch (cfg.mode) {
    case SweepMode::kSingleView: return "single_view";
    case SweepMode::kMultiView: return "mv_" + std::to_string(cfg.k_views) + "views";
    case SweepMode::kMergingSequence: return "merging_sequence_baseline";
    case SweepMode::kColorOnly: return "color_only";
    case SweepMode::kDepthOnly: return "depth_only";
    case SweepMode::kColorPlusDepth: return "color_plus_depth";
  }
  return "unknown";
}

SweepConfig parse_mode(const std::string& name) {
  SweepConfig c;
  if (name == "single_view") {
    c.mode = SweepMode::kSingleView;
  } else if (name == "merging_sequence_baseline") {
    c.mode = SweepMode::kMergingSequence;
  } else if (name == "color_only") {
    c.mode = SweepMode::kColorOnly;
  } else if (name == "depth_only") {
    c.mode = SweepMode::kDepthOnly;
  } else if (name == "color_plus_depth") {
    c.mode = SweepMode::kColorPlusDepth;
  } else if (name.size() == 9 && name.starts_with("mv_") && name.ends_with("views") && name[3] >= '1' && name[3] <= '9') {
    c.mode = SweepMode::kMultiView;
    c.k_views = name[3] - '0';
  } else {
    throw InvalidArgument("unknown sweep mode: " + name);
  }
  return c;
}

std::vector<ViewBundle> views_around_reference(std::span<const ViewBundle> views, int ref, int k) {
  const int n = static_cast<int>(views.size());
  if (k < 1 || k > n || ref < 0 || ref >= n) throw InvalidArgument("invalid view subset");
  const int start = std::clamp(ref - k / 2, 0, n - k);
  if (ref - start != k / 2) throw InvalidArgument("reference view cannot be centred in the subset");
  return {views.begin() + start, views.begin() + start + k};
}

RdPoint measure(std::span<const EncodeResult> streams, std::span<const ViewBundle> coded_views, double lambda,
                bool verify_decode) {
  RdPoint p;
  p.lambda = lambda;
  double psnr_sum = 0.0;
  double mse_sum = 0.0;
  std::size_t used = 0;
  for (const EncodeResult& s : streams) {
    const auto n = static_cast<std::size_t>(s.header.n_views);
    if (used + n > coded_views.size()) throw InvalidArgument("fewer views than coded streams");
    const auto views = coded_views.subspan(used, n);
    used += n;
    p.rate_bits += 8.0 * static_cast<double>(s.stream.size());
    const RateBreakdown b = rate_breakdown(s.stream);
    p.section_partition += b.chains;
    p.section_active += b.active;
    p.section_texture += b.texture;
    p.section_overhead += b.header + b.framing;

    std::vector<const DepthMap*> decoded;
    DecodeResult dec;
    if (verify_decode) {
      std::vector<ColorImage> colors;
      std::vector<ViewCalibration> cals;
      for (const ViewBundle& v : views) {
        colors.push_back(v.color);
        cals.push_back({v.camera, v.depth.min_z, v.depth.max_z});
      }
      dec = decode(s.stream, colors, cals);
      for (std::size_t v = 0; v < n; ++v) {
        if (!(dec.views[v].depth == s.views[v].depth) || !(dec.views[v].partition == s.views[v].partition)) {
          throw Error("decoder output differs from the encoder reconstruction");
        }
        decoded.push_back(&dec.views[v].depth);
      }
    } else {
      for (std::size_t v = 0; v < n; ++v) decoded.push_back(&s.views[v].depth);
    }
    for (std::size_t v = 0; v < n; ++v) {
      p.n_regions += s.views[v].partition.region_count();
      psnr_sum += psnr(views[v].depth, *decoded[v]);
      mse_sum += mse(views[v].depth, *decoded[v]);
    }
  }
  if (used == 0) throw InvalidArgument("nothing to measure");
  p.psnr_db = psnr_sum / static_cast<double>(used);
  p.mse = mse_sum / static_cast<double>(used);
  return p;
}

RdCurve rd_sweep(std::span<const ViewBundle> views, const SweepConfig& sweep, const EncoderConfig& cfg) {
  if (views.empty()) throw InvalidArgument("no views to sweep");
  cfg.validate();
  std::vector<RateTarget> targets;
  if (sweep.mode == SweepMode::kMergingSequence) {
    if (sweep.region_counts.empty()) throw InvalidArgument("merging-sequence sweep needs region counts");
  } else if (!sweep.budgets.empty()) {
    for (double b : sweep.budgets) targets.push_back({0.0, b});
  } else {
    if (sweep.lambdas.empty()) throw InvalidArgument("sweep needs lambdas or budgets");
    for (double l : sweep.lambdas) targets.push_back({l, std::nullopt});
  }

  std::vector<ViewBundle> coded(views.begin(), views.end());
  EncoderConfig ecfg = cfg;
  if (sweep.mode == SweepMode::kMultiView) {
    const int ref = cfg.ref_view < 0 ? static_cast<int>(views.size() / 2) : cfg.ref_view;
    coded = views_around_reference(views, ref, sweep.k_views);
    ecfg.ref_view = sweep.k_views / 2;
  }
  const LeafMode leaf = sweep.mode == SweepMode::kColorOnly  ? LeafMode::kColorOnly
                        : sweep.mode == SweepMode::kDepthOnly ? LeafMode::kDepthOnly
                        : sweep.mode == SweepMode::kMergingSequence ? sweep.baseline_leaves
                                                              : LeafMode::kColorPlusDepth;
  std::vector<PreparedView> prepared(coded.size());
  for (std::size_t v = 0; v < coded.size(); ++v) {
    EncoderConfig vcfg = ecfg;
    // Leaf overrides are indexed by input view.
    if (!cfg.depth_leaf_override.empty() && sweep.mode == SweepMode::kMultiView) {
      const int start = (cfg.ref_view < 0 ? static_cast<int>(views.size() / 2) : cfg.ref_view) - sweep.k_views / 2;
      prepared[v] = prepare_view(coded[v], vcfg, static_cast<std::size_t>(start) + v, leaf);
    } else {
      prepared[v] = prepare_view(coded[v], vcfg, v, leaf);
    }
  }

  const std::size_t n_points = sweep.mode == SweepMode::kMergingSequence ? sweep.region_counts.size() : targets.size();
  RdCurve curve(n_points);
  detail::parallel_for(static_cast<long long>(n_points), [&](long long i) {
    const auto pi = static_cast<std::size_t>(i);
    std::vector<EncodeResult> streams;
    double lambda = 0.0;
    switch (sweep.mode) {
      case SweepMode::kMultiView:
        streams.push_back(encode_multiview(coded, prepared, ecfg, targets[pi]));
        break;
      case SweepMode::kMergingSequence:
        for (std::size_t v = 0; v < coded.size(); ++v) {
          streams.push_back(encode_merging_sequence(coded[v], prepared[v], sweep.region_counts[pi], ecfg));
        }
        break;
      case SweepMode::kSingleView:
        for (std::size_t v = 0; v < coded.size(); ++v) {
          streams.push_back(encode_single_view(coded[v], prepared[v], ecfg, targets[pi]));
        }
        break;
      default:
        for (std::size_t v = 0; v < coded.size(); ++v) {
          streams.push_back(encode_leaf_mode(coded[v], prepared[v], ecfg, targets[pi]));
        }
        break;
    }
    if (sweep.mode != SweepMode::kMergingSequence) lambda = streams.front().lambda;
    curve[pi] = measure(streams, coded, lambda, sweep.verify_decode);
  });
  return curve;
}

void write_csv_header(std::ostream& out) {
  out << "mode,lambda,rate_bits,psnr_db,n_regions,section_partition,section_active,section_texture\n";
}

void write_csv(std::ostream& out, const std::string& mode, const RdCurve& curve) {
  for (const RdPoint& p : curve) {
    out << mode << ',' << p.lambda << ',' << p.rate_bits << ',' << p.psnr_db << ',' << p.n_regions << ','
        << p.section_partition << ',' << p.section_active << ',' << p.section_texture << '\n';
  }
}

void write_svg(const std::filesystem::path& path, std::span<const NamedCurve> curves) {
  constexpr double kW = 640.0;
  constexpr double kH = 420.0;
  constexpr double kM = 50.0;
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& nc : curves) {
    for (const auto& p : nc.curve) {
      if (!std::isfinite(p.psnr_db)) continue;
      x0 = std::min(x0, p.rate_bits);
      x1 = std::max(x1, p.rate_bits);
      y0 = std::min(y0, p.psnr_db);
      y1 = std::max(y1, p.psnr_db);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const auto sx = [&](double x) { return kM + (x - x0) / (x1 - x0) * (kW - 2 * kM); };
  const auto sy = [&](double y) { return kH - kM - (y - y0) / (y1 - y0) * (kH - 2 * kM); };

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kM << "\" y1=\"" << kH - kM << "\" x2=\"" << kW - kM << "\" y2=\"" << kH - kM
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kM << "\" y1=\"" << kM << "\" x2=\"" << kM << "\" y2=\"" << kH - kM
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">rate (bits) "
      << x0 << " to " << x1 << "</text>\n";
  out << "<text x=\"12\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 12 " << kH / 2
      << ")\" text-anchor=\"middle\">PSNR (dB) " << y0 << " to " << y1 << "</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* colour = palette[i % 6];
    RdCurve pts = curves[i].curve;
    std::sort(pts.begin(), pts.end(), [](const RdPoint& a, const RdPoint& b) { return a.rate_bits < b.rate_bits; });
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) {
      if (std::isfinite(p.psnr_db)) out << sx(p.rate_bits) << ',' << sy(p.psnr_db) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kW - kM - 150 << "\" y=\"" << kM + 18.0 * static_cast<double>(i) << "\" fill=\"" << colour
        << "\">" << curves[i].name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace pdmc
