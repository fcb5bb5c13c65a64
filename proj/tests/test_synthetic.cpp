#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mpiflow/synthetic.hpp"

using namespace mpiflow;

namespace {

SyntheticScene base_scene() {
  SyntheticScene s;
  s.width = 64;
  s.height = 48;
  s.frame_count = 4;
  s.focal = 50.0;
  s.background_depth = 10.0;
  s.background_seed = 9;
  return s;
}

LayerSpec square(double x0, double y0, double size, double depth, double vx, double vy,
                 double vz = 0.0, uint32_t seed = 21) {
  LayerSpec l;
  l.x0 = x0;
  l.y0 = y0;
  l.width = size;
  l.height = size;
  l.depth = depth;
  l.vx = vx;
  l.vy = vy;
  l.vz = vz;
  l.texture_seed = seed;
  return l;
}

}  // namespace

TEST_CASE("static scene with static camera renders identical frames and zero flow") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 12, 2.0, 0, 0));
  const RenderedSequence seq = render_sequence(s);
  REQUIRE(seq.frames.size() == 4);
  for (int i = 1; i < 4; ++i) {
    for (size_t j = 0; j < seq.frames[0].data.size(); ++j)
      CHECK(seq.frames[i].data[j] == seq.frames[0].data[j]);
    for (size_t j = 0; j < seq.depths[0].data.size(); ++j)
      CHECK(seq.depths[i].data[j] == seq.depths[0].data[j]);
  }
  for (const Image& flow : seq.object_flow)
    for (float v : flow.data) CHECK(v == 0.f);
}

TEST_CASE("moving square has flow (4,0) on its pixels and a 4-wide disocclusion strip") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 12, 2.0, 4, 0));
  const RenderedSequence seq = render_sequence(s);

  const Image& d0 = seq.depths[0];
  const Image& f0 = seq.object_flow[0];
  int square_px = 0, moving = 0;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      if (d0.at(y, x, 0) < 5.f) {
        ++square_px;
        CHECK(f0.at(y, x, 0) == doctest::Approx(4.0).epsilon(1e-6));
        CHECK(f0.at(y, x, 1) == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(f0.at(y, x, 2) == doctest::Approx(0.0).epsilon(1e-6));
        ++moving;
      } else {
        CHECK(f0.at(y, x, 0) == 0.f);
        CHECK(f0.at(y, x, 1) == 0.f);
      }
    }
  CHECK(square_px == 12 * 12);

  // Pixel diff between consecutive frames: the vacated strip is 4 px wide.
  const Image& d1 = seq.depths[1];
  for (int y = 13; y < 23; ++y) {
    for (int x = 20; x < 24; ++x) {
      CHECK(d0.at(y, x, 0) < 5.f);   // covered at t=0
      CHECK(d1.at(y, x, 0) > 5.f);   // background at t=1
    }
    CHECK(d1.at(y, 24, 0) < 5.f);  // still covered past the strip
  }
}

TEST_CASE("camera translation with a static scene yields zero object flow") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 12, 2.0, 0, 0));
  s.camera_velocity = Eigen::Vector3d(0.05, -0.02, 0.01);
  const RenderedSequence seq = render_sequence(s);
  for (const Image& flow : seq.object_flow)
    for (float v : flow.data) CHECK(std::abs(v) < 1e-9f);
  // But the frames themselves do change.
  bool any_diff = false;
  for (size_t j = 0; j < seq.frames[0].data.size(); ++j)
    if (seq.frames[0].data[j] != seq.frames[1].data[j]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("integer-velocity square shifts by whole pixels between frames") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 12, 2.0, 3, 1));
  const RenderedSequence seq = render_sequence(s);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const int sx = x + 3, sy = y + 1;
      if (sx >= s.width || sy >= s.height) continue;
      if (seq.depths[0].at(y, x, 0) < 5.f) {
        CHECK(seq.depths[1].at(sy, sx, 0) < 5.f);
        for (int c = 0; c < 3; ++c)
          CHECK(seq.frames[1].at(sy, sx, c) == doctest::Approx(seq.frames[0].at(y, x, c))
                                                   .epsilon(1e-6));
      }
    }
}

TEST_CASE("depth motion translates appearance without rescaling") {
  SyntheticScene s = base_scene();
  // Centered square receding 0.5 m/frame: appearance is a pure translation.
  s.layers.push_back(square(26, 18, 12, 2.0, 0, 0, 0.5));
  const RenderedSequence seq = render_sequence(s);
  const Image& f0 = seq.object_flow[0];
  // Appearance shift: f * ox * (1/z0 - 1/z1), identical at every square pixel.
  int square_px = 0;
  float dx0 = 0.f, dy0 = 0.f;
  bool first = true;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      if (seq.depths[0].at(y, x, 0) > 5.f) continue;
      ++square_px;
      if (first) {
        dx0 = f0.at(y, x, 0);
        dy0 = f0.at(y, x, 1);
        first = false;
      }
      CHECK(f0.at(y, x, 0) == doctest::Approx(dx0).epsilon(1e-5));
      CHECK(f0.at(y, x, 1) == doctest::Approx(dy0).epsilon(1e-5));
      CHECK(f0.at(y, x, 2) == doctest::Approx(0.5).epsilon(1e-6));
    }
  CHECK(square_px == 12 * 12);
}

TEST_CASE("layers sharing a depth are rejected") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(10, 10, 8, 10.0, 0, 0));  // same depth as background
  CHECK_THROWS_AS(render_sequence(s), std::domain_error);
}

TEST_CASE("oracle pose warp: identity reproduces the frame") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 12, 2.0, 0, 0));
  const RenderedSequence seq = render_sequence(s);
  const OracleWarpResult res =
      oracle_pose_warp(seq.frames[0], seq.depths[0], seq.cameras[0], seq.cameras[0]);
  for (size_t j = 0; j < seq.frames[0].data.size(); ++j)
    CHECK(res.frame.data[j] == seq.frames[0].data[j]);
  for (float v : res.valid.data) CHECK(v == 1.f);
}

TEST_CASE("oracle pose warp: integer camera shift on a single plane is an exact shift") {
  SyntheticScene s = base_scene();
  s.layers.clear();  // background only, at 10 m
  const RenderedSequence seq = render_sequence(s);
  CameraModel dst = seq.cameras[0];
  dst.pose(0, 3) = -0.4;  // shift = f * t / d = 50 * 0.4 / 10 = 2 px
  const OracleWarpResult res = oracle_pose_warp(seq.frames[0], seq.depths[0], seq.cameras[0], dst);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const int tx = x - 2;
      if (tx < 0) continue;
      CHECK(res.valid.at(y, tx, 0) == 1.f);
      for (int c = 0; c < 3; ++c)
        CHECK(res.frame.at(y, tx, c) == doctest::Approx(seq.frames[0].at(y, x, c)).epsilon(1e-6));
    }
}
