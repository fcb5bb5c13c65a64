#pragma once

#include <cstdint>
#include <vector>

#include "mpiflow/camera.hpp"
#include "mpiflow/tensor.hpp"

namespace mpiflow {

/// A textured fronto-parallel rectangle. Position and size are given in pixels
/// of the canonical (identity-pose) camera at t = 0; the rectangle's world
/// extent is fixed from that footprint and it translates with a constant world
/// velocity derived from (vx, vy) pixels/frame at its depth plus vz meters/frame.
struct LayerSpec {
  double x0 = 0, y0 = 0;
  double width = 0, height = 0;  // pixels
  double depth = 1.0;            // meters at t = 0
  double vx = 0, vy = 0;         // pixels/frame in the canonical view
  double vz = 0;                 // meters/frame
  uint32_t texture_seed = 0;
};

struct SyntheticScene {
  int width = 128, height = 128;
  int frame_count = 2;
  double focal = 100.0;
  double background_depth = 10.0;
  uint32_t background_seed = 1;
  std::vector<LayerSpec> layers;
  Eigen::Vector3d camera_velocity = Eigen::Vector3d::Zero();       // meters/frame
  Eigen::Vector3d camera_rotation_rate = Eigen::Vector3d::Zero();  // axis-angle rad/frame

  CameraModel camera_at(int frame) const;
};

struct RenderedSequence {
  std::vector<Image> frames;       // h,w,3
  std::vector<Image> depths;      // h,w,1 meters
  std::vector<CameraModel> cameras;
  /// Object-motion-only flow from frame i to i+1, expressed in camera i's
  /// view: h,w,3 with (dx, dy) pixels and dz meters. Last entry is zero.
  std::vector<Image> object_flow;
};

/// Deterministic z-buffered layered render. Throws std::domain_error when two
/// layers (or a layer and the background) share a depth.
RenderedSequence render_sequence(const SyntheticScene& scene);

struct OracleWarpResult {
  Image frame;  // h,w,3
  Image depth;  // h,w,1
  Image valid;  // h,w,1; 0 marks holes
};

/// Independent point-cloud z-buffer renderer: per-pixel unproject, transform,
/// project, rounded to the nearest target pixel. Used as a cross-check oracle.
OracleWarpResult oracle_pose_warp(const Image& frame, const Image& depth,
                                  const CameraModel& src, const CameraModel& dst);

}  // namespace mpiflow
