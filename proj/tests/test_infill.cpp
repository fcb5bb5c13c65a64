#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "mpiflow/infill.hpp"
#include "mpiflow/network.hpp"

using namespace mpiflow;

namespace {

/// All pixels occupied on plane 0 with distinct colors; plane 1 empty.
MultiPlaneImage flat_mpi(int h, int w) {
  MultiPlaneImage m;
  m.plane_depths = {2.0, 8.0};
  m.color = Volume4(2, h, w, 3);
  m.depth = Volume(2, h, w);
  m.alpha = Volume(2, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      m.alpha.at(0, y, x) = 1.f;
      m.depth.at(0, y, x) = 2.f;
      m.color.at(0, y, x, 0) = static_cast<float>(y) / h;
      m.color.at(0, y, x, 1) = static_cast<float>(x) / w;
      m.color.at(0, y, x, 2) = 0.5f;
    }
  return m;
}

void punch_hole(MultiPlaneImage& m, int y, int x) {
  for (int z = 0; z < m.planes(); ++z) {
    m.alpha.at(z, y, x) = 0.f;
    m.depth.at(z, y, x) = 0.f;
    for (int c = 0; c < 3; ++c) m.color.at(z, y, x, c) = 0.f;
  }
}

}  // namespace

TEST_CASE("detect_disocclusions marks exactly the all-empty pixels") {
  MultiPlaneImage m = flat_mpi(6, 8);
  for (int y = 0; y < 6; ++y) punch_hole(m, y, 3);
  const Image holes = detect_disocclusions(m);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) CHECK(holes.at(y, x, 0) == (x == 3 ? 1.f : 0.f));
}

TEST_CASE("a hole-free MPI passes through infill unchanged") {
  const MultiPlaneImage m = flat_mpi(5, 5);
  InfillOptions opts;
  const MultiPlaneImage out = infill_step(m, opts);
  CHECK(out.color.data == m.color.data);
  CHECK(out.alpha.data == m.alpha.data);
  CHECK(out.depth.data == m.depth.data);
}

TEST_CASE("a single hole copies its unique nearest neighbor exactly") {
  // Corner hole whose only distance-1 neighbor is its right neighbor.
  MultiPlaneImage n = flat_mpi(5, 5);
  punch_hole(n, 0, 0);
  punch_hole(n, 1, 0);
  punch_hole(n, 1, 1);  // (0,0)'s only distance-1 neighbor left is (0,1)
  InfillOptions opts;
  const MultiPlaneImage out = infill_step(n, opts);
  CHECK(out.alpha.at(0, 0, 0) == 1.f);
  CHECK(out.depth.at(0, 0, 0) == n.depth.at(0, 0, 1));
  for (int c = 0; c < 3; ++c) CHECK(out.color.at(0, 0, 0, c) == n.color.at(0, 0, 1, c));
}

TEST_CASE("equidistant candidates resolve to the scanline-first voxel") {
  // Only (0,2), (2,0), (2,4), (4,2) are occupied; the center hole at (2,2) is
  // at squared distance 4 from all of them. Scanline order picks (0,2).
  MultiPlaneImage m = flat_mpi(5, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x)
      if (!((y == 0 && x == 2) || (y == 2 && x == 0) || (y == 2 && x == 4) ||
            (y == 4 && x == 2)))
        punch_hole(m, y, x);
  InfillOptions opts;
  const MultiPlaneImage out = infill_step(m, opts);
  for (int c = 0; c < 3; ++c) CHECK(out.color.at(0, 2, 2, c) == m.color.at(0, 0, 2, c));
}

TEST_CASE("nearest-valid fills a whole strip in one step and is then idempotent") {
  MultiPlaneImage m = flat_mpi(6, 10);
  for (int y = 0; y < 6; ++y)
    for (int x = 4; x < 7; ++x) punch_hole(m, y, x);
  InfillOptions opts;
  const MultiPlaneImage once = infill_step(m, opts);
  const Image holes = detect_disocclusions(once);
  for (float v : holes.data) CHECK(v == 0.f);

  const MultiPlaneImage twice = infill_step(once, opts);
  CHECK(twice.color.data == once.color.data);
  CHECK(twice.alpha.data == once.alpha.data);

  // infill_iterative reaches the same fixed point.
  const MultiPlaneImage iter = infill_iterative(m, opts);
  CHECK(iter.color.data == once.color.data);
}

TEST_CASE("infilling never rewrites occupied voxels") {
  MultiPlaneImage m = flat_mpi(6, 6);
  punch_hole(m, 3, 3);
  InfillOptions opts;
  const MultiPlaneImage out = infill_iterative(m, opts);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      if (y == 3 && x == 3) continue;
      for (int c = 0; c < 3; ++c) CHECK(out.color.at(0, y, x, c) == m.color.at(0, y, x, c));
      CHECK(out.alpha.at(0, y, x) == m.alpha.at(0, y, x));
    }
}

TEST_CASE("network infill with zero weights cannot fill (zero vectors point at the hole)") {
  MultiPlaneImage m = flat_mpi(16, 16);
  punch_hole(m, 8, 8);
  const InfillNetworkWeights w = InfillNetworkWeights::zeros();
  InfillOptions opts;
  opts.method = InfillMethod::kNetwork;
  opts.weights = &w;
  const MultiPlaneImage out = infill_step(m, opts);
  CHECK(out.alpha.at(0, 8, 8) == 0.f);
  CHECK(detect_disocclusions(out).at(8, 8, 0) == 1.f);
}

TEST_CASE("network method without weights is rejected") {
  MultiPlaneImage m = flat_mpi(4, 4);
  punch_hole(m, 1, 1);
  InfillOptions opts;
  opts.method = InfillMethod::kNetwork;
  CHECK_THROWS_AS(infill_step(m, opts), std::invalid_argument);
}
