#pragma once

#include <Eigen/Dense>

#include "mpiflow/tensor.hpp"

namespace mpiflow {

/// Pinhole camera: intrinsics K (pixels) and world-to-camera pose T (meters).
/// Depth is positive z in the camera frame.
struct CameraModel {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  int width = 0;
  int height = 0;

  /// Throws std::invalid_argument if K is not upper-triangular with positive
  /// focal entries, or if the rotation block of T is not orthonormal.
  void validate() const;
};

struct FlowVector3 {
  double dx = 0.0;  // pixels
  double dy = 0.0;  // pixels
  double dz = 0.0;  // meters
};

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
  bool valid = false;  // false when the point projects behind the camera
};

/// Reprojects pixel (x, y) at the given depth from src to dst, displaced by u
/// before unprojection: K T_dst T_src^-1 (d + u_z) K^-1 (x + u_xy).
/// Throws std::domain_error when depth + u.dz <= 0.
ProjectedPoint reproject_point(double x, double y, double depth, const FlowVector3& u,
                               const CameraModel& src, const CameraModel& dst);

constexpr float kSplatWeightEps = 1e-6f;

struct SplatResult {
  Image payload;  // normalized where weight > kSplatWeightEps, zero elsewhere
  Image weight;   // h x w x 1 accumulated splat weight
};

/// Forward bilinear splatting: each source sample distributes payload * weight
/// to the 4 neighboring integer target pixels. Out-of-bounds samples are dropped.
/// target_coords is h x w x 2 holding (x, y) per source pixel.
SplatResult splat_forward(const Image& values, const Image& weights,
                          const Image& target_coords, int target_h, int target_w);

}  // namespace mpiflow
