#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pdmc/error.hpp"
#include "pdmc/geometry.hpp"

using namespace pdmc;

namespace {

Camera rotated_camera(double angle) {
  Camera c;
  c.fx = 500.0;
  c.fy = 480.0;
  c.cx = 160.0;
  c.cy = 120.0;
  c.rotation = Eigen::AngleAxisd(angle, Vec3(0.2, 1.0, 0.1).normalized()).toRotationMatrix();
  c.translation = Vec3(0.3, -0.1, 0.5);
  return c;
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0));
}

}  // namespace

TEST_CASE("unproject then project returns the pixel and depth") {
  const Camera cam = rotated_camera(0.2);
  for (double u : {0.0, 13.5, 319.0}) {
    for (double z : {1.0, 3.7, 8.0}) {
      const auto p = project(unproject({u, 77.25}, z, cam), cam);
      REQUIRE(p.has_value());
      CHECK(p->pixel.u == doctest::Approx(u).epsilon(1e-12));
      CHECK(p->pixel.v == doctest::Approx(77.25).epsilon(1e-12));
      CHECK(p->depth == doctest::Approx(z).epsilon(1e-12));
    }
  }
}

TEST_CASE("points behind the camera do not project") {
  Camera cam;
  CHECK_FALSE(project(Vec3(0.0, 0.0, -1.0), cam).has_value());
  CHECK_THROWS_AS(unproject({0.0, 0.0}, 0.0, cam), InvalidArgument);
}

TEST_CASE("camera validation") {
  Camera c;
  CHECK_NOTHROW(c.validate());
  c.fx = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = Camera{};
  c.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("canonical planes have unit normals with non-negative z") {
  const Plane3D p = Plane3D::canonical(Vec3(0.0, 0.0, -2.0), -4.0);
  CHECK(p.normal.z() == doctest::Approx(1.0));
  CHECK(p.offset == doctest::Approx(2.0));
  const Plane3D q = Plane3D::canonical(Vec3(0.0, -3.0, 0.0), 1.5);
  CHECK(q.normal.y() == doctest::Approx(1.0));
  CHECK(q.offset == doctest::Approx(-0.5));
  CHECK(p.signed_distance(Vec3(0.0, 0.0, 5.0)) == doctest::Approx(3.0));
}

TEST_CASE("least squares recovers an exact plane") {
  const Plane3D truth = Plane3D::canonical(Vec3(0.1, -0.3, 1.0), 2.5);
  std::vector<Vec3> pts;
  const Vec3 e1 = truth.normal.unitOrthogonal();
  const Vec3 e2 = truth.normal.cross(e1);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.push_back(truth.normal * truth.offset + 0.1 * i * e1 + 0.13 * j * e2);
  }
  const Plane3D fit = fit_plane_lsq(pts);
  CHECK(angle_between(fit.normal, truth.normal) < 1e-9);
  CHECK(fit.offset == doctest::Approx(truth.offset).epsilon(1e-9));
}

TEST_CASE("degenerate point sets raise DegenerateFit") {
  std::vector<Vec3> two{Vec3(0, 0, 1), Vec3(1, 0, 1)};
  CHECK_THROWS_AS(fit_plane_lsq(two), DegenerateFit);
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 2.0 * i, 1.0);
  CHECK_THROWS_AS(fit_plane_lsq(line), DegenerateFit);
}

TEST_CASE("RANSAC ignores outliers and is deterministic") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 400; ++i) {
    if (i % 4 == 0) {
      pts.emplace_back(u(rng), u(rng), 3.0 + 2.0 * u(rng));
    } else {
      const double x = u(rng);
      const double y = u(rng);
      pts.emplace_back(x, y, 2.0 + 0.2 * x - 0.1 * y);
    }
  }
  const RansacConfig cfg;
  const auto a = fit_plane_ransac(pts, cfg);
  const auto b = fit_plane_ransac(pts, cfg);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->plane == b->plane);
  CHECK(a->inlier_count >= 300);
  CHECK(angle_between(a->plane.normal, Vec3(-0.2, 0.1, 1.0)) < 1e-6);
}

TEST_CASE("RANSAC reports failure below the inlier fraction") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> cloud;
  for (int i = 0; i < 200; ++i) cloud.emplace_back(u(rng), u(rng), 3.0 + u(rng));
  RansacConfig cfg;
  cfg.min_inlier_fraction = 0.9;
  CHECK_FALSE(fit_plane_ransac(cloud, cfg).has_value());
  cfg.inlier_threshold = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("region plane falls back to a fronto-parallel plane at the median depth") {
  const Camera cam;
  std::vector<Vec3> pts{Vec3(0, 0, 2), Vec3(1, 1, 2), Vec3(2, 2, 2)};
  std::vector<double> depths{5.0, 2.0, 3.0};
  const Plane3D p = fit_region_plane(pts, depths, cam, RansacConfig{}, 200);
  CHECK(p.normal.z() == doctest::Approx(1.0));
  CHECK(p.offset == doctest::Approx(3.0));
}

TEST_CASE("plane depth along a ray matches the analytic intersection") {
  const Camera cam = rotated_camera(0.1);
  const Plane3D world = Plane3D::canonical(Vec3(0.2, 0.1, 1.0), 4.0);
  for (double u : {10.0, 150.0, 300.0}) {
    const auto z = plane_depth_at(world, {u, 50.0}, cam);
    REQUIRE(z.has_value());
    CHECK(world.signed_distance(unproject({u, 50.0}, *z, cam)) == doctest::Approx(0.0).epsilon(1e-9));
  }
  const Plane3D parallel{Vec3::UnitX(), 5.0};
  CHECK_FALSE(plane_depth_at(parallel, {0.0, 0.0}, Camera{}).has_value());
  const Plane3D behind{Vec3::UnitZ(), -1.0};
  CHECK_FALSE(plane_depth_at(behind, {0.0, 0.0}, Camera{}).has_value());
}

TEST_CASE("frame changes are inverse to each other") {
  const Camera cam = rotated_camera(0.4);
  const Plane3D world = Plane3D::canonical(Vec3(-0.3, 0.2, 1.0), 3.0);
  const Plane3D back = to_world_frame(to_camera_frame(world, cam), cam);
  CHECK(angle_between(back.normal, world.normal) < 1e-12);
  CHECK(back.offset == doctest::Approx(world.offset).epsilon(1e-12));
  const Vec3 x = unproject({100.0, 80.0}, 2.0, cam);
  CHECK(to_camera_frame(world, cam).signed_distance(cam.rotation * x + cam.translation) ==
        doctest::Approx(world.signed_distance(x)).epsilon(1e-12));
}

TEST_CASE("spherical parameters round trip") {
  for (double theta : {0.0, 0.3, 1.2, 1.5}) {
    for (double phi : {0.0, 1.0, 4.0, 6.2}) {
      const SphericalPlane s{theta, phi, 3.0};
      const Plane3D p = spherical_to_plane(s);
      CHECK(p.normal.norm() == doctest::Approx(1.0));
      CHECK(p.normal.z() == doctest::Approx(std::cos(theta)));
      const SphericalPlane t = plane_to_spherical(p);
      CHECK(t.theta == doctest::Approx(theta).epsilon(1e-12));
      CHECK(t.dist == doctest::Approx(3.0));
      if (theta > 0.0) CHECK(t.phi == doctest::Approx(phi).epsilon(1e-12));
    }
  }
  const SphericalPlane fronto = plane_to_spherical(Plane3D::fronto_parallel(2.0));
  CHECK(fronto.theta == 0.0);
  CHECK(fronto.dist == 2.0);
}
