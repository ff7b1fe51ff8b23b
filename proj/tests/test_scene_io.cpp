#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pdmc/error.hpp"
#include "pdmc/scene_io.hpp"
#include "support.hpp"

using namespace pdmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pdmc_test_scene_io";
  fs::create_directories(dir);
  return dir / name;
}

// Nearest patch hit along the pixel ray, from patch bounds and plane depths.
double oracle_depth(const std::vector<ScenePatch>& patches, const Camera& cam, int r, int c, double max_z) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : patches) {
    const auto z = plane_depth_at(p.plane(), {static_cast<double>(c), static_cast<double>(r)}, cam);
    if (!z || *z >= best) continue;
    const Vec3 x = unproject({static_cast<double>(c), static_cast<double>(r)}, *z, cam) - p.center;
    if (!p.unbounded && (std::abs(x.dot(p.axis_u)) > p.half_u + 1e-9 || std::abs(x.dot(p.axis_v)) > p.half_v + 1e-9)) {
      continue;
    }
    best = *z;
  }
  return std::isfinite(best) ? best : max_z;
}

}  // namespace

TEST_CASE("generate_scene is deterministic and respects the depth range") {
  const SceneSpec spec = testing::small_spec(80, 60, 3, 11);
  const auto a = generate_scene(spec);
  const auto b = generate_scene(spec);
  REQUIRE(a.size() == 3);
  for (std::size_t v = 0; v < a.size(); ++v) {
    CHECK(a[v].depth == b[v].depth);
    CHECK(a[v].color == b[v].color);
    CHECK_NOTHROW(a[v].validate());
  }
  SceneSpec other = spec;
  other.rng_seed = 12;
  CHECK_FALSE(generate_scene(other)[0].depth == a[0].depth);
}

TEST_CASE("noiseless depth equals the nearest ray-patch intersection") {
  const SceneSpec spec = testing::small_spec(64, 48, 2, 5);
  const auto views = generate_scene(spec);
  const auto patches = scene_patches(spec);
  std::size_t checked = 0;
  for (const auto& v : views) {
    for (int r = 0; r < spec.height; r += 3) {
      for (int c = 0; c < spec.width; c += 3) {
        const double want = std::clamp(oracle_depth(patches, v.camera, r, c, spec.max_z), spec.min_z, spec.max_z);
        CHECK(v.depth.at(r, c) == doctest::Approx(want).epsilon(1e-6));
        ++checked;
      }
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("patch colours are distinct and piecewise constant") {
  const SceneSpec spec = testing::small_spec(64, 48, 1, 9);
  const auto patches = scene_patches(spec);
  REQUIRE(static_cast<int>(patches.size()) == spec.plane_count);
  CHECK(patches[0].unbounded);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (std::size_t j = i + 1; j < patches.size(); ++j) CHECK(patches[i].color != patches[j].color);
  }
}

TEST_CASE("cameras sit on a horizontal baseline with the middle one as reference") {
  SceneSpec spec;
  spec.n_views = 5;
  spec.baseline = 0.2;
  const auto cams = scene_cameras(spec);
  REQUIRE(cams.size() == 5);
  CHECK(reference_view(spec) == 2);
  CHECK(cams[2].center().norm() == doctest::Approx(0.0));
  for (std::size_t i = 1; i < cams.size(); ++i) {
    const Vec3 d = cams[i].center() - cams[i - 1].center();
    CHECK(d.x() == doctest::Approx(0.2));
    CHECK(d.y() == doctest::Approx(0.0));
    CHECK(d.z() == doctest::Approx(0.0));
  }
}

TEST_CASE("invalid scene specs are rejected") {
  SceneSpec s;
  s.n_views = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = SceneSpec{};
  s.min_z = 3.0;
  s.max_z = 2.0;
  CHECK_THROWS_AS(generate_scene(s), InvalidArgument);
}

TEST_CASE("scene spec JSON round trip") {
  SceneSpec s = testing::small_spec(40, 30, 4, 99);
  s.noise_sigma = 0.01;
  s.baseline = 0.05;
  const auto path = scratch("spec.json");
  save_scene_spec(s, path);
  const SceneSpec t = load_scene_spec(path);
  CHECK(t.width == s.width);
  CHECK(t.height == s.height);
  CHECK(t.n_views == s.n_views);
  CHECK(t.rng_seed == s.rng_seed);
  CHECK(t.noise_sigma == s.noise_sigma);
  CHECK(t.baseline == s.baseline);
}

TEST_CASE("PPM and PFM round trips are exact") {
  const auto views = generate_scene(testing::small_spec(33, 17, 1, 3));
  const auto ppm = scratch("c.ppm");
  const auto pfm = scratch("d.pfm");
  write_ppm(views[0].color, ppm);
  write_pfm(views[0].depth, pfm);
  CHECK(read_ppm(ppm) == views[0].color);
  CHECK(read_pfm(pfm, views[0].depth.min_z, views[0].depth.max_z) == views[0].depth);
}

TEST_CASE("16-bit inverse-depth PGM maps the range endpoints exactly") {
  DepthMap d(3, 1, 1.0, 8.0);
  d.at(0, 0) = 1.0f;
  d.at(0, 1) = 8.0f;
  d.at(0, 2) = 2.0f;
  const auto path = scratch("d16.pgm");
  write_depth_pgm16(d, path);
  const Gray16 raw = read_pgm16(path);
  CHECK(raw.values[0] == 65535);
  CHECK(raw.values[1] == 0);
  const DepthMap back = read_depth_pgm16(path, 1.0, 8.0);
  CHECK(back.at(0, 0) == doctest::Approx(1.0));
  CHECK(back.at(0, 1) == doctest::Approx(8.0));
  CHECK(back.at(0, 2) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("camera files round trip") {
  Camera c;
  c.fx = 300.5;
  c.fy = 301.25;
  c.cx = 159.5;
  c.cy = 119.5;
  c.translation = Vec3(0.1, -0.2, 0.3);
  const auto path = scratch("cam.txt");
  write_camera(c, 1.5, 9.0, path);
  const CameraFile f = read_camera(path);
  CHECK(f.camera == c);
  CHECK(f.min_z == 1.5);
  CHECK(f.max_z == 9.0);
}

TEST_CASE("load_view pairs the three files") {
  const auto views = generate_scene(testing::small_spec(20, 10, 1, 4));
  const ViewPaths paths{scratch("v.ppm"), scratch("v.pfm"), scratch("v.cam")};
  write_view(views[0], paths);
  const ViewBundle back = load_view(paths);
  CHECK(back.color == views[0].color);
  CHECK(back.depth == views[0].depth);
  CHECK(back.camera == views[0].camera);
}

TEST_CASE("malformed and missing files raise typed errors") {
  CHECK_THROWS_AS(read_ppm(scratch("does_not_exist.ppm")), IoError);
  const auto bad = scratch("bad.ppm");
  std::ofstream(bad) << "P3\n2 2\n255\n";
  CHECK_THROWS_AS(read_ppm(bad), FormatError);
  const auto short_pfm = scratch("short.pfm");
  std::ofstream(short_pfm, std::ios::binary) << "Pf\n4 4\n-1.0\n" << std::string(8, '\0');
  CHECK_THROWS_AS(read_pfm(short_pfm, 1.0, 2.0), FormatError);
}

TEST_CASE("depth outside the declared range fails validation") {
  DepthMap d(2, 2, 1.0, 2.0, 1.5f);
  CHECK_NOTHROW(d.validate());
  d.at(1, 1) = 2.5f;
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  ViewBundle vb;
  vb.depth = DepthMap(2, 2, 1.0, 2.0, 1.5f);
  vb.color = ColorImage(3, 2);
  CHECK_THROWS_AS(vb.validate(), InvalidArgument);
}
