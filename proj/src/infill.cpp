#include "mpiflow/infill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mpiflow {

namespace {

constexpr float kOccupied = 0.5f;

struct Coord {
  int y, x;
};

/// For one plane, finds for every empty voxel the nearest occupied voxel by
/// exact Euclidean distance, scanline (y, then x) order breaking ties.
/// Expanding square-ring search: once a candidate at squared distance d2 is
/// found, only rings with r*r <= d2 can still improve on it, so scanning up to
/// ceil(sqrt(d2)) is enough. Returns -1,-1 when the plane is entirely empty.
std::vector<Coord> nearest_valid_map(const MultiPlaneImage& mpi, int z) {
  const int H = mpi.height(), W = mpi.width();
  std::vector<Coord> result(static_cast<size_t>(H) * W, {-1, -1});
  bool any_valid = false;
  for (int y = 0; y < H && !any_valid; ++y)
    for (int x = 0; x < W && !any_valid; ++x)
      if (mpi.alpha.at(z, y, x) >= kOccupied) any_valid = true;
  if (!any_valid) return result;

  const int max_r = std::max(H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (mpi.alpha.at(z, y, x) >= kOccupied) {
        result[static_cast<size_t>(y) * W + x] = {y, x};
        continue;
      }
      long best = std::numeric_limits<long>::max();
      Coord pick{-1, -1};
      auto consider = [&](int cy, int cx) {
        if (cy < 0 || cy >= H || cx < 0 || cx >= W) return;
        if (mpi.alpha.at(z, cy, cx) < kOccupied) return;
        const long dy = cy - y, dx = cx - x;
        const long d2 = dy * dy + dx * dx;
        if (d2 < best || (d2 == best && (cy < pick.y || (cy == pick.y && cx < pick.x)))) {
          best = d2;
          pick = {cy, cx};
        }
      };
      for (int r = 1; r <= max_r; ++r) {
        if (pick.y >= 0 && static_cast<long>(r) * r > best) break;
        for (int cx = x - r; cx <= x + r; ++cx) {
          consider(y - r, cx);
          consider(y + r, cx);
        }
        for (int cy = y - r + 1; cy <= y + r - 1; ++cy) {
          consider(cy, x - r);
          consider(cy, x + r);
        }
      }
      result[static_cast<size_t>(y) * W + x] = pick;
    }
  }
  return result;
}

void copy_voxel(MultiPlaneImage& dst, const MultiPlaneImage& src, int z, int ty, int tx, int sy,
                int sx) {
  for (int c = 0; c < src.color.c; ++c) dst.color.at(z, ty, tx, c) = src.color.at(z, sy, sx, c);
  dst.alpha.at(z, ty, tx) = src.alpha.at(z, sy, sx);
  dst.depth.at(z, ty, tx) = src.depth.at(z, sy, sx);
}

}  // namespace

Image detect_disocclusions(const MultiPlaneImage& mpi, float eps) {
  const int H = mpi.height(), W = mpi.width();
  Image holes(H, W, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      float sum = 0.f;
      for (int z = 0; z < mpi.planes(); ++z) sum += mpi.alpha.at(z, y, x);
      holes.at(y, x, 0) = sum < eps ? 1.f : 0.f;
    }
  return holes;
}

MultiPlaneImage infill_step(const MultiPlaneImage& mpi, const InfillOptions& opts) {
  const int Z = mpi.planes(), H = mpi.height(), W = mpi.width();
  const Image holes = detect_disocclusions(mpi);
  MultiPlaneImage out = mpi;

  if (opts.method == InfillMethod::kNetwork) {
    if (opts.weights == nullptr)
      throw std::invalid_argument("infill_step: network method needs weights");
    const Volume4 vectors = infill_network_forward(mpi, *opts.weights);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (holes.at(y, x, 0) < 0.5f) continue;
        for (int z = 0; z < Z; ++z) {
          const int sx = std::clamp(
              static_cast<int>(std::lround(x + vectors.at(z, y, x, 0))), 0, W - 1);
          const int sy = std::clamp(
              static_cast<int>(std::lround(y + vectors.at(z, y, x, 1))), 0, H - 1);
          if (mpi.alpha.at(z, sy, sx) >= kOccupied) copy_voxel(out, mpi, z, y, x, sy, sx);
        }
      }
    }
    return out;
  }

  for (int z = 0; z < Z; ++z) {
    const std::vector<Coord> nearest = nearest_valid_map(mpi, z);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (holes.at(y, x, 0) < 0.5f) continue;
        const Coord c = nearest[static_cast<size_t>(y) * W + x];
        if (c.y < 0) continue;  // plane entirely empty
        copy_voxel(out, mpi, z, y, x, c.y, c.x);
      }
    }
  }
  return out;
}

MultiPlaneImage infill_iterative(const MultiPlaneImage& mpi, const InfillOptions& opts) {
  MultiPlaneImage cur = mpi;
  for (int i = 0; i < opts.iterations; ++i) {
    const Image holes = detect_disocclusions(cur);
    if (std::all_of(holes.data.begin(), holes.data.end(), [](float v) { return v < 0.5f; })) break;
    cur = infill_step(cur, opts);
  }
  return cur;
}

}  // namespace mpiflow
