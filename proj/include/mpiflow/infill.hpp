#pragma once

#include <string>

#include "mpiflow/mpi.hpp"
#include "mpiflow/network.hpp"

namespace mpiflow {

/// Marks pixels where every plane is empty (per-pixel alpha sum below eps):
/// 1 = hole, 0 = covered. Shape h,w,1.
Image detect_disocclusions(const MultiPlaneImage& mpi, float eps = 1e-6f);

enum class InfillMethod { kNearestValid, kNetwork };

struct InfillOptions {
  InfillMethod method = InfillMethod::kNearestValid;
  int iterations = 3;
  const InfillNetworkWeights* weights = nullptr;  // required for kNetwork
};

/// One infilling pass. Nearest-valid copies, per plane, the closest occupied
/// voxel (exact Euclidean distance, ties broken in scanline order); the
/// network method samples at the predicted per-voxel vectors. Copies color,
/// alpha, and true depth. Already-occupied voxels are untouched.
MultiPlaneImage infill_step(const MultiPlaneImage& mpi, const InfillOptions& opts);

/// Runs infill_step `opts.iterations` times, stopping early once no hole
/// pixels remain.
MultiPlaneImage infill_iterative(const MultiPlaneImage& mpi, const InfillOptions& opts);

}  // namespace mpiflow
