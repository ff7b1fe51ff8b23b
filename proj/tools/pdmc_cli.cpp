// Command-line front end: scene generation, encoding, decoding, RD sweeps,
// Bjontegaard metrics, rate breakdowns and view rendering.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "pdmc/error.hpp"
#include "pdmc/eval.hpp"
#include "pdmc/pipeline.hpp"
#include "pdmc/scene_io.hpp"

namespace fs = std::filesystem;
using namespace pdmc;

namespace {

DepthFormat format_of(const fs::path& p) {
  return p.extension() == ".pgm" ? DepthFormat::kPgm16 : DepthFormat::kPfm;
}

// A view descriptor lists colour, depth and camera files relative to itself.
ViewBundle load_descriptor(const fs::path& yaml_path, int view_id) {
  YAML::Node node;
  try {
    node = YAML::LoadFile(yaml_path.string());
  } catch (const YAML::Exception& e) {
    throw IoError("cannot read view descriptor " + yaml_path.string() + ": " + e.what());
  }
  for (const char* key : {"color", "depth", "camera"}) {
    if (!node[key]) throw FormatError(yaml_path.string() + " lacks key '" + key + "'");
  }
  const fs::path base = yaml_path.parent_path();
  ViewPaths paths{base / node["color"].as<std::string>(), base / node["depth"].as<std::string>(),
                  base / node["camera"].as<std::string>()};
  return load_view(paths, view_id, format_of(paths.depth));
}

std::vector<ViewBundle> load_views(const std::vector<std::string>& descriptors) {
  std::vector<ViewBundle> views;
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    views.push_back(load_descriptor(descriptors[i], static_cast<int>(i)));
  }
  return views;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

struct EncoderOptions {
  int n_regs_color = 300;
  int n_regs_depth = 300;
  double c_a = 1.2;
  double c_a_color = 0.0;
  int bits_theta = 8;
  int bits_phi = 8;
  int n_dist = 12;
  int ref = -1;
  std::vector<std::string> leaf_partitions;

  void add_to(CLI::App* app) {
    app->add_option("--n-regs-color", n_regs_color, "Colour leaf regions")->capture_default_str();
    app->add_option("--n-regs-depth", n_regs_depth, "Depth leaf regions")->capture_default_str();
    app->add_option("--c-a", c_a, "Bits per depth contour element")->capture_default_str();
    app->add_option("--c-a-color", c_a_color, "Bits per colour contour element")->capture_default_str();
    app->add_option("--bits-theta", bits_theta)->capture_default_str();
    app->add_option("--bits-phi", bits_phi)->capture_default_str();
    app->add_option("--n-dist", n_dist)->capture_default_str();
    app->add_option("--ref", ref, "Reference view index (default: middle view)");
    app->add_option("--leaf-partition", leaf_partitions, "16-bit PGM label maps replacing the depth leaf partitions")
        ->delimiter(',');
  }

  EncoderConfig config(std::uint64_t seed) const {
    EncoderConfig c;
    c.n_regs_color = n_regs_color;
    c.n_regs_depth = n_regs_depth;
    c.rate.c_a = c_a;
    c.rate.c_a_color = c_a_color;
    c.rate.r_texture = 1.0 + bits_theta + bits_phi + n_dist;
    c.quant = {bits_theta, bits_phi, n_dist};
    c.ref_view = ref;
    c.hierarchy.ransac.rng_seed = seed;
    for (const auto& p : leaf_partitions) c.depth_leaf_override.push_back(partition_from_pgm(read_pgm16(p)));
    return c;
  }
};

std::vector<RdPoint> read_csv_curve(const fs::path& path, const std::string& mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<RdPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 5) throw FormatError("malformed CSV row in " + path.string());
    if (!mode.empty() && f[0] != mode) continue;
    RdPoint p;
    p.lambda = std::stod(f[1]);
    p.rate_bits = std::stod(f[2]);
    p.psnr_db = std::stod(f[3]);
    p.n_regions = std::stoi(f[4]);
    out.push_back(p);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar depth-map multiview codec"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  int threads = 0;
  app.set_config("--config", "", "INI or TOML file with option values");
  app.add_option("--seed", seed, "Random seed for scene generation and RANSAC")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)");

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Write a synthetic multi-view planar scene");
  SceneSpec spec;
  std::string gen_out;
  std::string spec_file;
  gen->add_option("-o,--out", gen_out, "Output directory")->required();
  gen->add_option("--spec", spec_file, "JSON scene description");
  gen->add_option("--views", spec.n_views)->capture_default_str();
  gen->add_option("--width", spec.width)->capture_default_str();
  gen->add_option("--height", spec.height)->capture_default_str();
  gen->add_option("--planes", spec.plane_count)->capture_default_str();
  gen->add_option("--baseline", spec.baseline)->capture_default_str();
  gen->add_option("--noise", spec.noise_sigma)->capture_default_str();

  // encode
  auto* enc = app.add_subcommand("encode", "Encode views into a bitstream");
  std::vector<std::string> enc_views;
  double enc_lambda = 200.0;
  double enc_budget = -1.0;
  std::string enc_out;
  std::string enc_recon;
  bool enc_single = false;
  EncoderOptions enc_opts;
  enc->add_option("--views", enc_views, "View descriptor files (.yaml)")->required()->delimiter(',');
  enc->add_option("--lambda", enc_lambda, "Lagrange multiplier")->capture_default_str();
  enc->add_option("--budget", enc_budget, "Bit budget on the modelled rate (overrides --lambda)");
  enc->add_option("-o,--out", enc_out, "Output stream")->required();
  enc->add_option("--recon", enc_recon, "Directory for the encoder reconstruction");
  enc->add_flag("--single-view", enc_single, "Use the single-view path (one view only)");
  enc_opts.add_to(enc);

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a bitstream given the decoded colour views");
  std::string dec_in;
  std::vector<std::string> dec_colors;
  std::vector<std::string> dec_cameras;
  std::string dec_out;
  dec->add_option("stream", dec_in, "Input stream")->required();
  dec->add_option("--colors", dec_colors, "Colour images (.ppm), one per view")->required()->delimiter(',');
  dec->add_option("--cameras", dec_cameras, "Camera files, one per view")->required()->delimiter(',');
  dec->add_option("-o,--out", dec_out, "Output directory")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Rate-distortion sweep");
  std::vector<std::string> sw_views;
  std::vector<std::string> sw_modes{"mv_3views"};
  std::vector<double> sw_lambdas;
  std::vector<double> sw_budgets;
  std::vector<int> sw_regions;
  std::string sw_csv;
  std::string sw_svg;
  bool sw_hull = false;
  std::string sw_baseline = "depth_only";
  EncoderOptions sw_opts;
  sw->add_option("--views", sw_views, "View descriptor files (.yaml)")->required()->delimiter(',');
  sw->add_option("--mode", sw_modes,
                 "single_view, mv_<k>views, merging_sequence_baseline, color_only, depth_only, color_plus_depth")
      ->delimiter(',')
      ->capture_default_str();
  sw->add_option("--lambdas", sw_lambdas, "Lambda values")->delimiter(',');
  sw->add_option("--budgets", sw_budgets, "Bit budgets")->delimiter(',');
  sw->add_option("--regions", sw_regions, "Region counts for the merging-sequence baseline")->delimiter(',');
  sw->add_option("--csv", sw_csv, "CSV output (default: stdout)");
  sw->add_option("--svg", sw_svg, "SVG chart output");
  sw->add_flag("--hull", sw_hull, "Keep only convex-hull points");
  sw->add_option("--baseline-leaves", sw_baseline, "Leaf partition of the merging-sequence baseline")
      ->check(CLI::IsMember({"depth_only", "color_only", "color_plus_depth"}))
      ->capture_default_str();
  sw_opts.add_to(sw);

  // bd
  auto* bd = app.add_subcommand("bd", "Bjontegaard metrics between two curves in sweep CSV files");
  std::string bd_test;
  std::string bd_ref;
  std::string bd_test_mode;
  std::string bd_ref_mode;
  bd->add_option("--test", bd_test, "CSV of the tested curve")->required();
  bd->add_option("--reference", bd_ref, "CSV of the reference curve")->required();
  bd->add_option("--test-mode", bd_test_mode, "Mode column filter for the tested curve");
  bd->add_option("--reference-mode", bd_ref_mode, "Mode column filter for the reference curve");

  // breakdown
  auto* brk = app.add_subcommand("breakdown", "Bytes per bitstream section");
  std::string brk_in;
  brk->add_option("stream", brk_in, "Input stream")->required();

  // render
  auto* ren = app.add_subcommand("render", "Render a virtual view by depth-image-based warping");
  std::string ren_color;
  std::string ren_depth;
  std::string ren_src;
  std::string ren_dst;
  std::string ren_out;
  ren->add_option("--color", ren_color, "Source colour (.ppm)")->required();
  ren->add_option("--depth", ren_depth, "Source depth (.pfm or .pgm)")->required();
  ren->add_option("--src-camera", ren_src, "Source camera file")->required();
  ren->add_option("--dst-camera", ren_dst, "Destination camera file")->required();
  ren->add_option("-o,--out", ren_out, "Output image (.ppm)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    kernels::set_thread_count(threads);

    if (gen->parsed()) {
      if (!spec_file.empty()) spec = load_scene_spec(spec_file);
      spec.rng_seed = seed;
      spec.validate();
      fs::create_directories(gen_out);
      const auto views = generate_scene(spec);
      for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string stem = "view" + std::to_string(i);
        const ViewPaths paths{fs::path(gen_out) / (stem + ".ppm"), fs::path(gen_out) / (stem + ".pfm"),
                              fs::path(gen_out) / (stem + ".cam")};
        write_view(views[i], paths);
        std::ofstream yaml(fs::path(gen_out) / (stem + ".yaml"));
        yaml << "color: " << stem << ".ppm\ndepth: " << stem << ".pfm\ncamera: " << stem << ".cam\n";
      }
      save_scene_spec(spec, fs::path(gen_out) / "scene.json");
      std::cout << "wrote " << views.size() << " views to " << gen_out << " (reference view "
                << reference_view(spec) << ")\n";
    } else if (enc->parsed()) {
      const auto views = load_views(enc_views);
      const EncoderConfig cfg = enc_opts.config(seed);
      RateTarget target{enc_lambda, std::nullopt};
      if (enc_budget >= 0.0) target.budget_bits = enc_budget;
      EncodeResult res;
      if (enc_single) {
        if (views.size() != 1) throw InvalidArgument("--single-view needs exactly one view");
        res = encode_single_view(views.front(), cfg, target);
      } else {
        res = encode_multiview(views, cfg, target);
      }
      write_bytes(enc_out, res.stream);
      if (!enc_recon.empty()) {
        fs::create_directories(enc_recon);
        for (std::size_t v = 0; v < res.views.size(); ++v) {
          write_pfm(res.views[v].depth, fs::path(enc_recon) / ("depth" + std::to_string(v) + ".pfm"));
        }
      }
      std::cout << "lambda=" << res.lambda << " bytes=" << res.stream.size() << " model_rate_bits=" << res.model_rate;
      for (std::size_t v = 0; v < res.views.size(); ++v) {
        std::cout << " view" << v << ".regions=" << res.views[v].partition.region_count()
                  << " view" << v << ".psnr_db=" << psnr(views[v].depth, res.views[v].depth);
      }
      std::cout << '\n';
    } else if (dec->parsed()) {
      if (dec_colors.size() != dec_cameras.size()) throw InvalidArgument("--colors and --cameras differ in length");
      std::vector<ColorImage> colors;
      std::vector<ViewCalibration> cals;
      for (std::size_t i = 0; i < dec_colors.size(); ++i) {
        colors.push_back(read_ppm(dec_colors[i]));
        const CameraFile cf = read_camera(dec_cameras[i]);
        cals.push_back({cf.camera, cf.min_z, cf.max_z});
      }
      const auto res = decode(read_bytes(dec_in), colors, cals);
      fs::create_directories(dec_out);
      for (std::size_t v = 0; v < res.views.size(); ++v) {
        write_pfm(res.views[v].depth, fs::path(dec_out) / ("depth" + std::to_string(v) + ".pfm"));
        write_pgm16(partition_to_pgm(res.views[v].partition),
                    fs::path(dec_out) / ("partition" + std::to_string(v) + ".pgm"));
      }
      std::cout << "decoded " << res.views.size() << " views to " << dec_out << '\n';
    } else if (sw->parsed()) {
      const auto views = load_views(sw_views);
      const EncoderConfig cfg = sw_opts.config(seed);
      std::ofstream file;
      if (!sw_csv.empty()) {
        file.open(sw_csv);
        if (!file) throw IoError("cannot write " + sw_csv);
      }
      std::ostream& out = sw_csv.empty() ? std::cout : file;
      write_csv_header(out);
      std::vector<NamedCurve> curves;
      for (const auto& m : sw_modes) {
        SweepConfig sc = parse_mode(m);
        sc.lambdas = sw_lambdas;
        sc.budgets = sw_budgets;
        sc.region_counts = sw_regions;
        sc.baseline_leaves = sw_baseline == "color_only"         ? LeafMode::kColorOnly
                             : sw_baseline == "color_plus_depth" ? LeafMode::kColorPlusDepth
                                                                 : LeafMode::kDepthOnly;
        RdCurve curve = rd_sweep(views, sc, cfg);
        if (sw_hull) curve = hull_filter(curve);
        write_csv(out, mode_name(sc), curve);
        curves.push_back({mode_name(sc), std::move(curve)});
      }
      if (!sw_svg.empty()) write_svg(sw_svg, curves);
    } else if (bd->parsed()) {
      const auto r = bd_metrics(read_csv_curve(bd_test, bd_test_mode), read_csv_curve(bd_ref, bd_ref_mode));
      std::cout << "bd_rate_percent=" << r.bd_rate_percent << " bd_snr_db=" << r.bd_snr_db << '\n';
    } else if (brk->parsed()) {
      print_breakdown(std::cout, rate_breakdown(read_bytes(brk_in)));
    } else if (ren->parsed()) {
      const CameraFile src = read_camera(ren_src);
      const CameraFile dst = read_camera(ren_dst);
      const ColorImage color = read_ppm(ren_color);
      const DepthMap depth = format_of(ren_depth) == DepthFormat::kPgm16
                                 ? read_depth_pgm16(ren_depth, src.min_z, src.max_z)
                                 : read_pfm(ren_depth, src.min_z, src.max_z);
      write_ppm(render_virtual_view(color, depth, src.camera, dst.camera), ren_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
