#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdmc/geometry.hpp"

namespace pdmc {

/// Continuous per-pixel depth (camera-frame z) with the range it is
/// guaranteed to respect.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major
  double min_z = 1.0;
  double max_z = 2.0;

  DepthMap() = default;
  DepthMap(int w, int h, double min_z_, double max_z_, float fill = 0.0f);

  float& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  float at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  std::size_t size() const { return values.size(); }

  /// Throws InvalidArgument on empty rasters, a bad range, or values outside it.
  void validate() const;
  bool operator==(const DepthMap&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> values;

  ColorImage() = default;
  ColorImage(int w, int h, Rgb fill = {0, 0, 0});

  Rgb& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  const Rgb& at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  std::size_t size() const { return values.size(); }
  bool operator==(const ColorImage&) const = default;
};

struct ViewBundle {
  ColorImage color;
  DepthMap depth;
  Camera camera;
  int view_id = 0;

  void validate() const;
};

/// Synthetic multi-view scene made of textured planar patches in front of a
/// fronto-parallel background plane.
struct SceneSpec {
  int n_views = 3;
  int width = 320;
  int height = 240;
  double baseline = 0.1;
  int plane_count = 5;
  std::uint64_t rng_seed = 7;
  double noise_sigma = 0.0;
  double focal = 0.0;  // pixels; 0 selects 0.9 * width
  double min_z = 1.0;
  double max_z = 8.0;
  double background_depth = 6.0;

  void validate() const;
};

/// A bounded planar patch: points center + a*axis_u + b*axis_v with
/// |a| <= half_u and |b| <= half_v. The background patch is unbounded.
struct ScenePatch {
  Vec3 center;
  Vec3 axis_u;
  Vec3 axis_v;
  double half_u = 0.0;
  double half_v = 0.0;
  bool unbounded = false;
  Rgb color{};

  Plane3D plane() const;
};

/// Index of the reference (middle) camera of a generated scene.
int reference_view(const SceneSpec& spec);
std::vector<Camera> scene_cameras(const SceneSpec& spec);
/// Patch 0 is the background; 1..plane_count-1 are the foreground patches.
std::vector<ScenePatch> scene_patches(const SceneSpec& spec);
std::vector<ViewBundle> generate_scene(const SceneSpec& spec);

SceneSpec load_scene_spec(const std::filesystem::path& path);
void save_scene_spec(const SceneSpec& spec, const std::filesystem::path& path);

// --- raster formats ---

ColorImage read_ppm(const std::filesystem::path& path);
void write_ppm(const ColorImage& image, const std::filesystem::path& path);

/// Little-endian PFM (scale -1). Range metadata is not stored in PFM.
DepthMap read_pfm(const std::filesystem::path& path, double min_z, double max_z);
void write_pfm(const DepthMap& depth, const std::filesystem::path& path);

/// 16-bit PGM of inverse depth: 65535 at min_z, 0 at max_z (lossy).
DepthMap read_depth_pgm16(const std::filesystem::path& path, double min_z, double max_z);
void write_depth_pgm16(const DepthMap& depth, const std::filesystem::path& path);

/// 16-bit big-endian PGM of raw integer values.
struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
};
Gray16 read_pgm16(const std::filesystem::path& path);
void write_pgm16(const Gray16& image, const std::filesystem::path& path);

struct CameraFile {
  Camera camera;
  double min_z = 1.0;
  double max_z = 2.0;
};
CameraFile read_camera(const std::filesystem::path& path);
void write_camera(const Camera& camera, double min_z, double max_z,
                  const std::filesystem::path& path);

enum class DepthFormat { kPfm, kPgm16 };

struct ViewPaths {
  std::filesystem::path color;
  std::filesystem::path depth;
  std::filesystem::path camera;
};

ViewBundle load_view(const ViewPaths& paths, int view_id = 0,
                     DepthFormat format = DepthFormat::kPfm);
void write_view(const ViewBundle& bundle, const ViewPaths& paths,
                DepthFormat format = DepthFormat::kPfm);

}  // namespace pdmc
