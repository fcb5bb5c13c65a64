#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpiflow/camera.hpp"
#include "mpiflow/infill.hpp"
#include "mpiflow/metrics.hpp"
#include "mpiflow/mpi.hpp"
#include "mpiflow/network.hpp"
#include "mpiflow/synthetic.hpp"
#include "mpiflow/tensor.hpp"

namespace mpiflow {

/// An ordered RGB-D sequence with per-frame world-to-camera poses and shared
/// intrinsics.
struct SequenceDataset {
  std::vector<Image> frames;  // h,w,3
  std::vector<Image> depths;  // h,w,1
  std::vector<CameraModel> cameras;
  double frame_rate = 30.0;

  int size() const { return static_cast<int>(frames.size()); }
  void validate() const;
};

/// Directory layout: NNNN.png + NNNN.dpt (or NNNN.pfm), poses.txt,
/// intrinsics.txt.
SequenceDataset load_dataset(const std::string& dir);
void save_dataset(const std::string& dir, const SequenceDataset& ds);

enum class FlowBackend { kMatcher, kNetwork };

struct PredictionRequest {
  int index = 0;                 // n: the current rendered frame
  int factor = 2;                // k: frame-rate upsampling factor, >= 2
  int num_planes = 4;            // Z
  int s_z = 1;
  FlowBackend backend = FlowBackend::kMatcher;
  std::string weights_path;      // network backend weight file
  InfillMethod infill = InfillMethod::kNearestValid;
  int infill_iterations = 3;     // g
  std::string infill_weights_path;
  bool dump_intermediates = false;
  std::string dump_dir;

  void validate(int dataset_size) const;
};

struct PredictionResult {
  std::vector<Image> frames;      // k-1 predictions, for k' = 1..k-1
  std::vector<Image> hole_masks;  // holes remaining before the guarantee pass
  Flow3D local_flow;              // estimated once, u at frame n
  std::vector<double> plane_depths;
};

/// Full prediction pipeline: builds MPIs for f_n and f_{n-k} on a shared plane
/// table, nullifies camera motion by warping the past MPI to the current view,
/// estimates per-voxel local 3D flow, linearly extrapolates it to each future
/// step, warps the current MPI to the future views, infills disocclusions, and
/// alpha-composites. Reads only frames n and n-k.
PredictionResult predict_frames(const SequenceDataset& dataset, const PredictionRequest& request);

/// Flat key-value scene config: width/height/frames/focal/background_depth/
/// background_seed scalars, camera_velocity and camera_rotation_rate triples,
/// and one "layer x0 y0 w h depth vx vy vz seed" line per moving rectangle.
SyntheticScene parse_scene_config(const std::string& path);

/// Renders a parsed scene into a dataset (cameras from the scene trajectory).
SequenceDataset synthesize_dataset(const SyntheticScene& scene);

/// Compares matching NNNN.png files of two directories inside the evaluation
/// crop.
EvalReport evaluate_directories(const std::string& pred_dir, const std::string& gt_dir,
                                int crop_top_bottom = 40, int crop_left_right = 60);

/// Quick internal oracle checks (MPI round trip, identity warp, flow recovery
/// on a toy scene). Returns a human-readable report; ok = all passed.
struct SelftestResult {
  bool ok = false;
  std::string report;
};
SelftestResult run_selftest();

}  // namespace mpiflow
