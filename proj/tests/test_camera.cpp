#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "mpiflow/camera.hpp"

using namespace mpiflow;

namespace {

CameraModel make_camera(double f, double cx, double cy, int w, int h) {
  CameraModel cam;
  cam.intrinsics << f, 0, cx, 0, f, cy, 0, 0, 1;
  cam.width = w;
  cam.height = h;
  return cam;
}

CameraModel random_camera(std::mt19937& rng) {
  std::uniform_real_distribution<double> t(-0.3, 0.3);
  std::uniform_real_distribution<double> a(-0.1, 0.1);
  CameraModel cam = make_camera(90.0, 50.0, 40.0, 100, 80);
  const Eigen::Vector3d axis =
      Eigen::Vector3d(a(rng), a(rng), a(rng)).normalized();
  const double angle = a(rng);
  cam.pose.topLeftCorner<3, 3>() = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  cam.pose.block<3, 1>(0, 3) = Eigen::Vector3d(t(rng), t(rng), t(rng));
  return cam;
}

}  // namespace

TEST_CASE("identity reprojection returns the input") {
  const CameraModel cam = make_camera(100, 64, 48, 128, 96);
  const ProjectedPoint p = reproject_point(10, 20, 2.0, FlowVector3{}, cam, cam);
  CHECK(p.valid);
  CHECK(p.x == doctest::Approx(10).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(20).epsilon(1e-12));
  CHECK(p.depth == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("camera x-translation shifts a fronto-parallel point by fx*t/d") {
  const double f = 120.0, t = 0.5, d = 4.0;
  const CameraModel src = make_camera(f, 50, 50, 100, 100);
  CameraModel dst = src;
  dst.pose(0, 3) = -t;  // camera moves +t in world x (world-to-camera offset -t)

  // Brute-force matrix oracle.
  const Eigen::Vector3d ray = src.intrinsics.inverse() * Eigen::Vector3d(30, 44, 1) * d;
  const Eigen::Vector4d world = src.pose.inverse() * ray.homogeneous();
  const Eigen::Vector4d camp = dst.pose * world;
  const Eigen::Vector3d proj = dst.intrinsics * camp.head<3>();

  const ProjectedPoint p = reproject_point(30, 44, d, FlowVector3{}, src, dst);
  CHECK(p.valid);
  CHECK(p.x == doctest::Approx(30 - f * t / d).epsilon(1e-10));
  CHECK(p.y == doctest::Approx(44).epsilon(1e-10));
  CHECK(p.x == doctest::Approx(proj.x() / proj.z()).epsilon(1e-10));
  CHECK(p.depth == doctest::Approx(d).epsilon(1e-10));
}

TEST_CASE("180-degree roll about the optical axis mirrors through the principal point") {
  const CameraModel src = make_camera(50, 50, 50, 100, 100);
  CameraModel dst = src;
  dst.pose.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const ProjectedPoint p = reproject_point(0, 0, 1.0, FlowVector3{}, src, dst);
  CHECK(p.valid);
  CHECK(p.x == doctest::Approx(100).epsilon(1e-9));
  CHECK(p.y == doctest::Approx(100).epsilon(1e-9));
  CHECK(p.depth == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("non-positive effective depth throws, behind-camera points flagged invalid") {
  const CameraModel cam = make_camera(100, 64, 48, 128, 96);
  FlowVector3 u;
  u.dz = -3.0;
  CHECK_THROWS_AS(reproject_point(5, 5, 2.0, u, cam, cam), std::domain_error);

  CameraModel behind = cam;
  behind.pose(2, 3) = -10.0;  // dst camera 10 m forward; the point falls behind it
  const ProjectedPoint p = reproject_point(64, 48, 2.0, FlowVector3{}, cam, behind);
  CHECK_FALSE(p.valid);
}

TEST_CASE("flow displacement applies before unprojection") {
  const CameraModel cam = make_camera(100, 64, 48, 128, 96);
  FlowVector3 u;
  u.dx = 3.0;
  u.dy = -2.0;
  u.dz = 0.5;
  const ProjectedPoint p = reproject_point(10, 20, 2.0, u, cam, cam);
  CHECK(p.valid);
  CHECK(p.x == doctest::Approx(13).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(18).epsilon(1e-12));
  CHECK(p.depth == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("warp A->B then B->A round-trips within 1e-4 px") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraModel a = random_camera(rng);
    const CameraModel b = random_camera(rng);
    const double x = 40 + trial, y = 30 + trial % 7, d = 2.0 + 0.1 * trial;
    const ProjectedPoint fwd = reproject_point(x, y, d, FlowVector3{}, a, b);
    REQUIRE(fwd.valid);
    const ProjectedPoint back = reproject_point(fwd.x, fwd.y, fwd.depth, FlowVector3{}, b, a);
    REQUIRE(back.valid);
    CHECK(std::abs(back.x - x) < 1e-4);
    CHECK(std::abs(back.y - y) < 1e-4);
    CHECK(std::abs(back.depth - d) < 1e-4);
  }
}

TEST_CASE("camera validation rejects bad intrinsics and non-orthonormal rotations") {
  CameraModel cam = make_camera(100, 64, 48, 128, 96);
  CHECK_NOTHROW(cam.validate());

  CameraModel bad_k = cam;
  bad_k.intrinsics(1, 0) = 5.0;  // not upper-triangular
  CHECK_THROWS_AS(bad_k.validate(), std::invalid_argument);

  CameraModel neg_f = cam;
  neg_f.intrinsics(0, 0) = -100.0;
  CHECK_THROWS_AS(neg_f.validate(), std::invalid_argument);

  CameraModel bad_r = cam;
  bad_r.pose(0, 0) = 2.0;
  CHECK_THROWS_AS(bad_r.validate(), std::invalid_argument);
}

TEST_CASE("integer splat reproduces the payload exactly") {
  const int H = 6, W = 7;
  Image values(H, W, 1), weights(H, W, 1, 1.f), coords(H, W, 2);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      values.at(y, x, 0) = static_cast<float>(y * W + x);
      coords.at(y, x, 0) = static_cast<float>(x);
      coords.at(y, x, 1) = static_cast<float>(y);
    }
  const SplatResult res = splat_forward(values, weights, coords, H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      CHECK(res.payload.at(y, x, 0) == doctest::Approx(values.at(y, x, 0)));
      CHECK(res.weight.at(y, x, 0) == doctest::Approx(1.f));
    }
}

TEST_CASE("half-pixel splat spreads weight 0.5 to both horizontal neighbors") {
  Image values(1, 1, 1), weights(1, 1, 1, 1.f), coords(1, 1, 2);
  values.at(0, 0, 0) = 1.f;
  coords.at(0, 0, 0) = 0.5f;
  coords.at(0, 0, 1) = 0.f;
  const SplatResult res = splat_forward(values, weights, coords, 1, 2);
  CHECK(res.weight.at(0, 0, 0) == doctest::Approx(0.5f));
  CHECK(res.weight.at(0, 1, 0) == doctest::Approx(0.5f));
  // After normalization both neighbors read the full payload value.
  CHECK(res.payload.at(0, 0, 0) == doctest::Approx(1.f));
  CHECK(res.payload.at(0, 1, 0) == doctest::Approx(1.f));
}

TEST_CASE("colliding splats average by weight") {
  Image values(1, 2, 1), weights(1, 2, 1, 1.f), coords(1, 2, 2);
  values.at(0, 0, 0) = 2.f;
  values.at(0, 1, 0) = 4.f;
  for (int x = 0; x < 2; ++x) {
    coords.at(0, x, 0) = 0.f;
    coords.at(0, x, 1) = 0.f;
  }
  const SplatResult res = splat_forward(values, weights, coords, 1, 1);
  CHECK(res.payload.at(0, 0, 0) == doctest::Approx(3.f));
  CHECK(res.weight.at(0, 0, 0) == doctest::Approx(2.f));
}

TEST_CASE("splat conserves in-bounds mass before normalization") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<float> pos_x(0.f, 9.f), pos_y(0.f, 7.f), val(0.f, 1.f);
  const int H = 8, W = 10;
  Image values(H, W, 1), weights(H, W, 1), coords(H, W, 2);
  double in_mass = 0.0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      values.at(y, x, 0) = val(rng);
      weights.at(y, x, 0) = val(rng);
      coords.at(y, x, 0) = pos_x(rng);
      coords.at(y, x, 1) = pos_y(rng);
      in_mass += weights.at(y, x, 0);  // all targets strictly inside
    }
  const SplatResult res = splat_forward(values, weights, coords, H, W);
  double out_mass = 0.0;
  for (float v : res.weight.data) out_mass += v;
  CHECK(out_mass == doctest::Approx(in_mass).epsilon(1e-6));
}

TEST_CASE("splat drops out-of-bounds samples") {
  Image values(1, 1, 1, 1.f), weights(1, 1, 1, 1.f), coords(1, 1, 2);
  coords.at(0, 0, 0) = -5.f;
  coords.at(0, 0, 1) = 0.f;
  const SplatResult res = splat_forward(values, weights, coords, 4, 4);
  for (float v : res.weight.data) CHECK(v == 0.f);
}

TEST_CASE("splat rejects mismatched shapes") {
  Image values(2, 2, 1), weights(3, 2, 1), coords(2, 2, 2);
  CHECK_THROWS_AS(splat_forward(values, weights, coords, 2, 2), std::invalid_argument);
}
