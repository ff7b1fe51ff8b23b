#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pdmc/pipeline.hpp"

namespace pdmc {

double mse(const DepthMap& a, const DepthMap& b);
/// 10 log10(peak^2 / MSE); +infinity when the maps are identical.
double psnr(const DepthMap& a, const DepthMap& b, double peak);
/// PSNR with the continuous peak max_z - min_z of `a`.
double psnr(const DepthMap& a, const DepthMap& b);

struct RdPoint {
  double rate_bits = 0.0;
  double psnr_db = 0.0;
  double mse = 0.0;
  double lambda = 0.0;
  int n_regions = 0;
  std::size_t section_partition = 0;  // bytes of depth chains
  std::size_t section_active = 0;
  std::size_t section_texture = 0;
  std::size_t section_overhead = 0;   // header, length prefixes and checksum
};
using RdCurve = std::vector<RdPoint>;

struct BdResult {
  double bd_rate_percent = 0.0;
  double bd_snr_db = 0.0;
};

/// Bjontegaard metrics with cubic least-squares fits over the overlapping range.
BdResult bd_metrics(const RdCurve& test, const RdCurve& reference);

/// Lower convex hull of the points in (rate, MSE); rate strictly increasing
/// and MSE strictly decreasing.
RdCurve hull_filter(const RdCurve& curve);

/// Forward warp with a z-buffer; holes take the nearest valid pixel of their row.
ColorImage render_virtual_view(const ColorImage& color, const DepthMap& depth, const Camera& cam_src,
                               const Camera& cam_dst);

struct ViewRateBreakdown {
  std::size_t chains = 0;
  std::size_t active = 0;
  std::size_t texture = 0;
};

struct RateBreakdown {
  std::size_t header = 0;
  std::size_t framing = 0;  // section length prefixes and checksum
  std::vector<ViewRateBreakdown> views;
  std::size_t chains = 0;
  std::size_t active = 0;
  std::size_t texture = 0;
  std::size_t total = 0;
};

/// Byte counts per section; header + framing + sections equals the stream length.
RateBreakdown rate_breakdown(std::span<const std::uint8_t> stream);
void print_breakdown(std::ostream& out, const RateBreakdown& b);

enum class SweepMode {
  kSingleView,
  kMultiView,
  kMergingSequence,
  kColorOnly,
  kDepthOnly,
  kColorPlusDepth,
};

struct SweepConfig {
  SweepMode mode = SweepMode::kMultiView;
  int k_views = 3;                  // multiview mode
  std::vector<double> lambdas;      // optimised modes
  std::vector<double> budgets;      // optimised modes, used when non-empty
  std::vector<int> region_counts;   // merging-sequence mode
  LeafMode baseline_leaves = LeafMode::kDepthOnly;  // merging-sequence mode
  bool verify_decode = true;
};

std::string mode_name(const SweepConfig& cfg);
SweepConfig parse_mode(const std::string& name);

/// Views used by the k-view configuration: k consecutive views around the reference.
std::vector<ViewBundle> views_around_reference(std::span<const ViewBundle> views, int ref, int k);

/// One point per lambda, budget or region count, in input order. Rate is the
/// total stream size; PSNR is averaged over the coded views.
RdCurve rd_sweep(std::span<const ViewBundle> views, const SweepConfig& sweep, const EncoderConfig& cfg);

/// Rate and distortion of encoded streams, checked against the decoder when asked.
RdPoint measure(std::span<const EncodeResult> streams, std::span<const ViewBundle> coded_views, double lambda,
                bool verify_decode);

void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, const std::string& mode, const RdCurve& curve);

struct NamedCurve {
  std::string name;
  RdCurve curve;
};
/// Static line chart of PSNR against rate.
void write_svg(const std::filesystem::path& path, std::span<const NamedCurve> curves);

}  // namespace pdmc
