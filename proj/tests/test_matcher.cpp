#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mpiflow/flow.hpp"
#include "mpiflow/mpi.hpp"
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
                 double vz = 0.0) {
  LayerSpec l;
  l.x0 = x0;
  l.y0 = y0;
  l.width = size;
  l.height = size;
  l.depth = depth;
  l.vx = vx;
  l.vy = vy;
  l.vz = vz;
  l.texture_seed = 21;
  return l;
}

MultiPlaneImage mpi_of(const RenderedSequence& seq, int frame) {
  return build_mpi(seq.frames[frame], seq.depths[frame], 4, std::make_pair(1.0, 10.0));
}

void check_voxel(const Flow3D& f, int z, int y, int x, float ux, float uy, int shift) {
  CHECK(f.xy.at(z, y, x, 0) == doctest::Approx(ux).epsilon(1e-6));
  CHECK(f.xy.at(z, y, x, 1) == doctest::Approx(uy).epsilon(1e-6));
  for (int b = 0; b < f.bins(); ++b)
    CHECK(f.depth_dist.at(z, y, x, b) ==
          doctest::Approx(b == shift + f.s_z ? 1.f : 0.f).epsilon(1e-6));
}

}  // namespace

TEST_CASE("matching an MPI against itself yields identically zero flow") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 16, 2.0, 0, 0));
  const RenderedSequence seq = render_sequence(s);
  const MultiPlaneImage m = mpi_of(seq, 0);
  const Flow3D f = estimate_flow_matcher(m, m, MatcherConfig{});
  for (float v : f.xy.data) CHECK(v == 0.f);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        CHECK(f.depth_dist.at(z, y, x, 1) == 1.f);
        CHECK(f.depth_dist.at(z, y, x, 0) == 0.f);
        CHECK(f.depth_dist.at(z, y, x, 2) == 0.f);
      }
}

TEST_CASE("translating square recovered as (-4, 0) with no depth shift") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 16, 2.0, 2, 0));
  const RenderedSequence seq = render_sequence(s);
  // Reference is the current frame, source two frames back: the square sits
  // 4 px further right in the reference, so the flow back to the source is -4.
  const MultiPlaneImage ref = mpi_of(seq, 2);
  const MultiPlaneImage src = mpi_of(seq, 0);
  const Flow3D f = estimate_flow_matcher(ref, src, MatcherConfig{});

  const int zq = nearest_plane(2.0, ref.plane_depths);
  const int zb = nearest_plane(10.0, ref.plane_depths);
  for (int y = 16; y < 24; ++y)
    for (int x = 28; x < 36; ++x) check_voxel(f, zq, y, x, -4.f, 0.f, 0);
  // Background far from the square stays put.
  for (int y = 4; y < 10; ++y)
    for (int x = 4; x < 12; ++x) check_voxel(f, zb, y, x, 0.f, 0.f, 0);
}

TEST_CASE("approaching square recovered as a pure depth-plane shift") {
  SyntheticScene s = base_scene();
  // Centered on the principal point so depth motion changes no pixel: only
  // the occupied plane moves (2.2 m -> 1.4 m, one inverse-depth bin nearer).
  s.layers.push_back(square(32, 24, 12, 2.2, 0, 0, -0.8));
  const RenderedSequence seq = render_sequence(s);
  const MultiPlaneImage ref = mpi_of(seq, 1);
  const MultiPlaneImage src = mpi_of(seq, 0);
  const int z_ref = nearest_plane(1.4, ref.plane_depths);
  const int z_src = nearest_plane(2.2, ref.plane_depths);
  REQUIRE(z_src == z_ref + 1);

  const Flow3D f = estimate_flow_matcher(ref, src, MatcherConfig{});
  for (int y = 26; y < 34; ++y)
    for (int x = 34; x < 42; ++x) {
      REQUIRE(ref.alpha.at(z_ref, y, x) == 1.f);
      check_voxel(f, z_ref, y, x, 0.f, 0.f, +1);
    }
}

TEST_CASE("mismatched plane tables are rejected") {
  SyntheticScene s = base_scene();
  s.layers.push_back(square(20, 12, 16, 2.0, 0, 0));
  const RenderedSequence seq = render_sequence(s);
  const MultiPlaneImage a = mpi_of(seq, 0);
  const MultiPlaneImage b =
      build_mpi(seq.frames[0], seq.depths[0], 4, std::make_pair(1.0, 12.0));
  CHECK_THROWS_AS(estimate_flow_matcher(a, b, MatcherConfig{}), std::domain_error);
}
