#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mpiflow/camera.hpp"
#include "mpiflow/tensor.hpp"

namespace mpiflow {

/// Multi-plane image: Z RGBA planes plus true per-pixel depth, with a table of
/// plane depths sampled uniformly in inverse depth. plane_depths is strictly
/// increasing, so plane 0 is the nearest plane.
struct MultiPlaneImage {
  Volume4 color;  // z,h,w,3 in [0,1]
  Volume depth;   // z,h,w meters, valid wherever alpha > 0
  Volume alpha;   // z,h,w in [0,1]
  std::vector<double> plane_depths;

  int planes() const { return alpha.z; }
  int height() const { return alpha.h; }
  int width() const { return alpha.w; }
};

/// Z plane depths uniform in inverse depth between d_min and d_max, increasing.
std::vector<double> make_plane_depths(double d_min, double d_max, int num_planes);

/// Index of the plane nearest to `depth` in inverse depth; ties break toward
/// the nearer (smaller-depth) plane.
int nearest_plane(double depth, const std::vector<double>& plane_depths);

/// Builds a one-hot MPI from RGB-D: each pixel's alpha is 1 at the plane
/// nearest its true depth. Throws std::domain_error on non-positive depths.
MultiPlaneImage build_mpi(const Image& rgb, const Image& depth, int num_planes,
                          std::optional<std::pair<double, double>> depth_range = {});

/// Same, but on a caller-supplied plane table (for MPIs that must share plane
/// semantics); depths outside the table clamp to the boundary planes.
MultiPlaneImage build_mpi_on_planes(const Image& rgb, const Image& depth,
                                    const std::vector<double>& plane_depths);

struct CompositeResult {
  Image rgb;        // h,w,3
  Image hole_mask;  // h,w,1; 1 where accumulated alpha < 0.5
};

/// Back-to-front over-operator compositing.
CompositeResult alpha_composite(const MultiPlaneImage& mpi);

/// Pose-warps an MPI from src to dst view with optional per-voxel local flow
/// (z,h,w,3 real displacements), splatting bilinearly into the plane nearest
/// the reprojected depth. Voxels mapping out of bounds or to non-positive
/// depth are dropped, leaving holes.
MultiPlaneImage warp_mpi(const MultiPlaneImage& mpi, const CameraModel& src,
                         const CameraModel& dst, const Volume4* local_flow,
                         const std::vector<double>& target_plane_depths);

/// Per-voxel visibility: product of (1 - alpha) over all nearer planes.
Volume visibility_mask(const MultiPlaneImage& mpi);

}  // namespace mpiflow
