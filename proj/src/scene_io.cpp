#include "pdmc/scene_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pdmc/error.hpp"

namespace pdmc {

namespace fs = std::filesystem;

DepthMap::DepthMap(int w, int h, double min_z_, double max_z_, float fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill), min_z(min_z_), max_z(max_z_) {}

void DepthMap::validate() const {
  if (width <= 0 || height <= 0) throw InvalidArgument("depth map has no pixels");
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("depth map size does not match its dimensions");
  }
  if (!(min_z > 0.0) || !(max_z > min_z)) throw InvalidArgument("depth range must satisfy 0 < min_z < max_z");
  for (float v : values) {
    if (!(v >= min_z && v <= max_z)) {
      throw InvalidArgument("depth value " + std::to_string(v) + " outside [min_z, max_z]");
    }
  }
}

ColorImage::ColorImage(int w, int h, Rgb fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

void ViewBundle::validate() const {
  if (color.width <= 0 || color.height <= 0) throw InvalidArgument("color image has no pixels");
  if (color.width != depth.width || color.height != depth.height) {
    throw InvalidArgument("color and depth dimensions differ");
  }
  depth.validate();
  camera.validate();
}

// --- synthetic scenes ---

void SceneSpec::validate() const {
  if (n_views < 1) throw InvalidArgument("scene needs at least one view");
  if (plane_count < 1) throw InvalidArgument("scene needs at least one plane");
  if (width < 1 || height < 1 || width > 65535 || height > 65535) {
    throw InvalidArgument("scene image size out of range");
  }
  if (!(min_z > 0.0) || !(max_z > min_z)) throw InvalidArgument("scene depth range invalid");
  if (!(background_depth >= min_z && background_depth <= max_z)) {
    throw InvalidArgument("background depth outside the depth range");
  }
  if (noise_sigma < 0.0) throw InvalidArgument("noise sigma must be non-negative");
}

Plane3D ScenePatch::plane() const {
  const Vec3 n = axis_u.cross(axis_v);
  return Plane3D::canonical(n, n.dot(center));
}

int reference_view(const SceneSpec& spec) { return spec.n_views / 2; }

namespace {

double scene_focal(const SceneSpec& spec) {
  return spec.focal > 0.0 ? spec.focal : 0.9 * spec.width;
}

constexpr Rgb kPalette[] = {
    {40, 40, 120},  {220, 60, 60},  {60, 200, 80},  {240, 200, 40}, {160, 70, 200},
    {40, 190, 210}, {250, 130, 30}, {120, 120, 120}, {200, 150, 220}, {90, 60, 20},
    {10, 110, 60},  {240, 240, 240},
};

}  // namespace

std::vector<Camera> scene_cameras(const SceneSpec& spec) {
  spec.validate();
  std::vector<Camera> cams;
  const double f = scene_focal(spec);
  for (int i = 0; i < spec.n_views; ++i) {
    Camera c;
    c.fx = c.fy = f;
    c.cx = 0.5 * (spec.width - 1);
    c.cy = 0.5 * (spec.height - 1);
    const double x = (i - 0.5 * (spec.n_views - 1)) * spec.baseline;
    c.translation = Vec3(-x, 0.0, 0.0);
    cams.push_back(c);
  }
  return cams;
}

std::vector<ScenePatch> scene_patches(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double f = scene_focal(spec);

  std::vector<ScenePatch> patches;
  ScenePatch bg;
  bg.center = Vec3(0.0, 0.0, spec.background_depth);
  bg.axis_u = Vec3::UnitX();
  bg.axis_v = Vec3::UnitY();
  bg.unbounded = true;
  bg.color = kPalette[0];
  patches.push_back(bg);

  const double near_z = spec.min_z + 0.25 * (spec.background_depth - spec.min_z);
  const double far_z = spec.min_z + 0.75 * (spec.background_depth - spec.min_z);
  for (int k = 1; k < spec.plane_count; ++k) {
    ScenePatch p;
    const double z = near_z + (far_z - near_z) * unit(rng);
    const double half_w = z * 0.5 * spec.width / f;
    const double half_h = z * 0.5 * spec.height / f;
    p.center = Vec3((unit(rng) * 1.2 - 0.6) * half_w, (unit(rng) * 1.2 - 0.6) * half_h, z);
    const double tilt = unit(rng) * 35.0 * std::numbers::pi / 180.0;
    const double azimuth = unit(rng) * 2.0 * std::numbers::pi;
    const Vec3 n(std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth),
                 std::cos(tilt));
    Vec3 u = Vec3::UnitX() - n * n.x();
    u.normalize();
    p.axis_u = u;
    p.axis_v = n.cross(u);
    p.half_u = (0.2 + 0.25 * unit(rng)) * half_w;
    p.half_v = (0.2 + 0.25 * unit(rng)) * half_h;
    if (static_cast<std::size_t>(k) < std::size(kPalette)) {
      p.color = kPalette[k];
    } else {
      // Distinct from every earlier patch color.
      Rgb c;
      bool clash = true;
      while (clash) {
        for (auto& ch : c) ch = static_cast<std::uint8_t>(rng() & 0xff);
        clash = std::any_of(patches.begin(), patches.end(),
                            [&](const ScenePatch& q) { return q.color == c; });
      }
      p.color = c;
    }
    patches.push_back(p);
  }
  return patches;
}

std::vector<ViewBundle> generate_scene(const SceneSpec& spec) {
  const auto cameras = scene_cameras(spec);
  const auto patches = scene_patches(spec);
  std::vector<ViewBundle> views;
  for (int i = 0; i < spec.n_views; ++i) {
    ViewBundle vb;
    vb.view_id = i;
    vb.camera = cameras[static_cast<std::size_t>(i)];
    vb.color = ColorImage(spec.width, spec.height);
    vb.depth = DepthMap(spec.width, spec.height, spec.min_z, spec.max_z);
    std::mt19937_64 noise_rng(spec.rng_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
    const Vec3 origin = vb.camera.center();
    const Mat3 rt = vb.camera.rotation.transpose();
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        const Vec3 dir = rt * vb.camera.ray(c, r);
        double best_t = std::numeric_limits<double>::infinity();
        const ScenePatch* hit = nullptr;
        for (const ScenePatch& p : patches) {
          const Plane3D pl = p.plane();
          const double denom = pl.normal.dot(dir);
          if (std::abs(denom) < 1e-12) continue;
          const double t = (pl.offset - pl.normal.dot(origin)) / denom;
          if (!(t > 0.0) || t >= best_t) continue;
          if (!p.unbounded) {
            const Vec3 local = origin + t * dir - p.center;
            if (std::abs(local.dot(p.axis_u)) > p.half_u || std::abs(local.dot(p.axis_v)) > p.half_v) {
              continue;
            }
          }
          best_t = t;
          hit = &p;
        }
        double z = hit ? best_t : spec.max_z;
        if (spec.noise_sigma > 0.0) z += noise(noise_rng);
        vb.depth.at(r, c) = static_cast<float>(std::clamp(z, spec.min_z, spec.max_z));
        vb.color.at(r, c) = hit ? hit->color : Rgb{0, 0, 0};
      }
    }
    views.push_back(std::move(vb));
  }
  return views;
}

SceneSpec load_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("scene config " + path.string() + ": " + e.what());
  }
  SceneSpec s;
  try {
    s.n_views = j.value("n_views", s.n_views);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.baseline = j.value("baseline", s.baseline);
    s.plane_count = j.value("plane_count", s.plane_count);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.focal = j.value("focal", s.focal);
    s.min_z = j.value("min_z", s.min_z);
    s.max_z = j.value("max_z", s.max_z);
    s.background_depth = j.value("background_depth", s.background_depth);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("scene config " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

void save_scene_spec(const SceneSpec& s, const fs::path& path) {
  nlohmann::json j = {{"n_views", s.n_views},         {"width", s.width},
                      {"height", s.height},           {"baseline", s.baseline},
                      {"plane_count", s.plane_count}, {"rng_seed", s.rng_seed},
                      {"noise_sigma", s.noise_sigma}, {"focal", s.focal},
                      {"min_z", s.min_z},             {"max_z", s.max_z},
                      {"background_depth", s.background_depth}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// --- netpbm / pfm ---

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const fs::path& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw FormatError("truncated header in " + path.string());
  return tok;
}

int header_int(std::istream& in, const fs::path& path) {
  const std::string tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw FormatError("bad header field '" + tok + "' in " + path.string());
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad header field '" + tok + "' in " + path.string());
  }
}

void check_dims(int w, int h, const fs::path& path) {
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) {
    throw FormatError("invalid image dimensions in " + path.string());
  }
}

}  // namespace

ColorImage read_ppm(const fs::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P6") throw FormatError(path.string() + " is not a binary PPM");
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const int maxval = header_int(in, path);
  check_dims(w, h, path);
  if (maxval != 255) throw FormatError("only 8-bit PPM is supported: " + path.string());
  ColorImage img(w, h);
  in.read(reinterpret_cast<char*>(img.values.data()), static_cast<std::streamsize>(img.size() * 3));
  if (in.gcount() != static_cast<std::streamsize>(img.size() * 3)) {
    throw FormatError("truncated pixel data in " + path.string());
  }
  return img;
}

void write_ppm(const ColorImage& image, const fs::path& path) {
  if (image.width <= 0 || image.height <= 0) throw InvalidArgument("cannot write an empty image");
  auto out = open_out(path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.values.data()),
            static_cast<std::streamsize>(image.size() * 3));
  finish_write(out, path);
}

DepthMap read_pfm(const fs::path& path, double min_z, double max_z) {
  auto in = open_in(path);
  if (header_token(in, path) != "Pf") throw FormatError(path.string() + " is not a grayscale PFM");
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  check_dims(w, h, path);
  const std::string scale_tok = header_token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::logic_error&) {
    throw FormatError("bad PFM scale in " + path.string());
  }
  if (scale == 0.0) throw FormatError("bad PFM scale in " + path.string());
  const bool little = scale < 0.0;

  DepthMap d(w, h, min_z, max_z);
  std::vector<std::uint32_t> raw(d.size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * 4)) {
    throw FormatError("truncated pixel data in " + path.string());
  }
  const bool swap = little != (std::endian::native == std::endian::little);
  // PFM stores rows bottom to top.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::uint32_t bits = raw[static_cast<std::size_t>(h - 1 - r) * w + c];
      if (swap) bits = __builtin_bswap32(bits);
      d.at(r, c) = std::bit_cast<float>(bits);
    }
  }
  d.validate();
  return d;
}

void write_pfm(const DepthMap& depth, const fs::path& path) {
  if (depth.width <= 0 || depth.height <= 0) throw InvalidArgument("cannot write an empty depth map");
  auto out = open_out(path);
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  std::vector<std::uint32_t> raw(depth.size());
  for (int r = 0; r < depth.height; ++r) {
    for (int c = 0; c < depth.width; ++c) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(depth.at(r, c));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      raw[static_cast<std::size_t>(depth.height - 1 - r) * depth.width + c] = bits;
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  finish_write(out, path);
}

Gray16 read_pgm16(const fs::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P5") throw FormatError(path.string() + " is not a binary PGM");
  Gray16 g;
  g.width = header_int(in, path);
  g.height = header_int(in, path);
  check_dims(g.width, g.height, path);
  const int maxval = header_int(in, path);
  if (maxval < 256 || maxval > 65535) throw FormatError("expected a 16-bit PGM: " + path.string());
  const std::size_t n = static_cast<std::size_t>(g.width) * g.height;
  std::vector<unsigned char> raw(n * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("truncated pixel data in " + path.string());
  }
  g.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.values[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return g;
}

void write_pgm16(const Gray16& image, const fs::path& path) {
  if (image.width <= 0 || image.height <= 0) throw InvalidArgument("cannot write an empty image");
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  std::vector<unsigned char> raw(image.values.size() * 2);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(image.values[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(image.values[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  finish_write(out, path);
}

DepthMap read_depth_pgm16(const fs::path& path, double min_z, double max_z) {
  const Gray16 g = read_pgm16(path);
  DepthMap d(g.width, g.height, min_z, max_z);
  const double inv_min = 1.0 / min_z;
  const double inv_max = 1.0 / max_z;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double inv = g.values[i] / 65535.0 * (inv_min - inv_max) + inv_max;
    d.values[i] = static_cast<float>(std::clamp(1.0 / inv, min_z, max_z));
  }
  d.validate();
  return d;
}

void write_depth_pgm16(const DepthMap& depth, const fs::path& path) {
  Gray16 g{depth.width, depth.height, std::vector<std::uint16_t>(depth.size())};
  const double inv_min = 1.0 / depth.min_z;
  const double inv_max = 1.0 / depth.max_z;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double t = (1.0 / depth.values[i] - inv_max) / (inv_min - inv_max);
    g.values[i] = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
  }
  write_pgm16(g, path);
}

CameraFile read_camera(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw FormatError("bad number '" + tok + "' in " + path.string());
    } catch (const std::logic_error&) {
      throw FormatError("bad number '" + tok + "' in " + path.string());
    }
  }
  if (v.size() != 4 + 9 + 3 + 2) {
    throw FormatError("camera file " + path.string() + " must hold 18 numbers, found " +
                      std::to_string(v.size()));
  }
  CameraFile cf;
  cf.camera.fx = v[0];
  cf.camera.fy = v[1];
  cf.camera.cx = v[2];
  cf.camera.cy = v[3];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cf.camera.rotation(r, c) = v[4 + 3 * r + c];
  }
  cf.camera.translation = Vec3(v[13], v[14], v[15]);
  cf.min_z = v[16];
  cf.max_z = v[17];
  try {
    cf.camera.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!(cf.min_z > 0.0) || !(cf.max_z > cf.min_z)) {
    throw FormatError(path.string() + ": depth range must satisfy 0 < minz < maxz");
  }
  return cf;
}

void write_camera(const Camera& cam, double min_z, double max_z, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << cam.fx << ' ' << cam.fy << ' ' << cam.cx << ' ' << cam.cy << '\n';
  for (int r = 0; r < 3; ++r) {
    out << cam.rotation(r, 0) << ' ' << cam.rotation(r, 1) << ' ' << cam.rotation(r, 2) << '\n';
  }
  out << cam.translation.x() << ' ' << cam.translation.y() << ' ' << cam.translation.z() << '\n';
  out << min_z << ' ' << max_z << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

ViewBundle load_view(const ViewPaths& paths, int view_id, DepthFormat format) {
  ViewBundle vb;
  vb.view_id = view_id;
  const CameraFile cf = read_camera(paths.camera);
  vb.camera = cf.camera;
  vb.color = read_ppm(paths.color);
  vb.depth = format == DepthFormat::kPfm ? read_pfm(paths.depth, cf.min_z, cf.max_z)
                                         : read_depth_pgm16(paths.depth, cf.min_z, cf.max_z);
  if (vb.color.width != vb.depth.width || vb.color.height != vb.depth.height) {
    throw FormatError("color " + paths.color.string() + " and depth " + paths.depth.string() +
                      " differ in size");
  }
  return vb;
}

void write_view(const ViewBundle& bundle, const ViewPaths& paths, DepthFormat format) {
  bundle.validate();
  write_ppm(bundle.color, paths.color);
  if (format == DepthFormat::kPfm) {
    write_pfm(bundle.depth, paths.depth);
  } else {
    write_depth_pgm16(bundle.depth, paths.depth);
  }
  write_camera(bundle.camera, bundle.depth.min_z, bundle.depth.max_z, paths.camera);
}

}  // namespace pdmc
