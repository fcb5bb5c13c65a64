#include "mpiflow/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace mpiflow {

void CameraModel::validate() const {
  const Eigen::Matrix3d& K = intrinsics;
  if (K(0, 0) <= 0.0 || K(1, 1) <= 0.0)
    throw std::invalid_argument("camera: focal entries must be positive");
  if (std::abs(K(1, 0)) > 1e-12 || std::abs(K(2, 0)) > 1e-12 || std::abs(K(2, 1)) > 1e-12)
    throw std::invalid_argument("camera: K must be upper-triangular");
  if (std::abs(K(2, 2) - 1.0) > 1e-12)
    throw std::invalid_argument("camera: K[2][2] must be 1");

  const Eigen::Matrix3d R = pose.topLeftCorner<3, 3>();
  if (((R.transpose() * R) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw std::invalid_argument("camera: rotation block is not orthonormal");
  if ((pose.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("camera: last pose row must be (0,0,0,1)");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("camera: image size must be positive");
}

ProjectedPoint reproject_point(double x, double y, double depth, const FlowVector3& u,
                               const CameraModel& src, const CameraModel& dst) {
  if (depth <= 0.0) throw std::domain_error("reproject_point: non-positive depth");
  const double d_eff = depth + u.dz;
  if (d_eff <= 0.0) throw std::domain_error("reproject_point: non-positive effective depth");

  const Eigen::Vector3d pix(x + u.dx, y + u.dy, 1.0);
  const Eigen::Vector3d cam_src = src.intrinsics.inverse() * pix * d_eff;
  const Eigen::Vector4d world =
      src.pose.inverse() * Eigen::Vector4d(cam_src.x(), cam_src.y(), cam_src.z(), 1.0);
  const Eigen::Vector4d cam_dst = dst.pose * world;

  ProjectedPoint out;
  out.depth = cam_dst.z();
  if (cam_dst.z() <= 0.0) {
    out.valid = false;
    return out;
  }
  const Eigen::Vector3d proj =
      dst.intrinsics * Eigen::Vector3d(cam_dst.x(), cam_dst.y(), cam_dst.z());
  out.x = proj.x() / proj.z();
  out.y = proj.y() / proj.z();
  out.valid = true;
  return out;
}

SplatResult splat_forward(const Image& values, const Image& weights,
                          const Image& target_coords, int target_h, int target_w) {
  if (weights.h != values.h || weights.w != values.w || weights.c != 1)
    throw std::invalid_argument("splat_forward: weight plane shape mismatch");
  if (target_coords.h != values.h || target_coords.w != values.w || target_coords.c != 2)
    throw std::invalid_argument("splat_forward: coordinate plane shape mismatch");

  SplatResult out;
  out.payload = Image(target_h, target_w, values.c);
  out.weight = Image(target_h, target_w, 1);

  for (int y = 0; y < values.h; ++y) {
    for (int x = 0; x < values.w; ++x) {
      const float wgt = weights.at(y, x, 0);
      if (wgt <= 0.f) continue;
      const double tx = target_coords.at(y, x, 0);
      const double ty = target_coords.at(y, x, 1);
      if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
      const int x0 = static_cast<int>(std::floor(tx));
      const int y0 = static_cast<int>(std::floor(ty));
      const double fx = tx - x0;
      const double fy = ty - y0;
      const double kw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int t = 0; t < 4; ++t) {
        if (xs[t] < 0 || xs[t] >= target_w || ys[t] < 0 || ys[t] >= target_h) continue;
        const float sw = static_cast<float>(kw[t] * wgt);
        out.weight.at(ys[t], xs[t], 0) += sw;
        for (int ch = 0; ch < values.c; ++ch)
          out.payload.at(ys[t], xs[t], ch) += sw * values.at(y, x, ch);
      }
    }
  }

  for (int y = 0; y < target_h; ++y) {
    for (int x = 0; x < target_w; ++x) {
      const float wsum = out.weight.at(y, x, 0);
      if (wsum > kSplatWeightEps) {
        for (int ch = 0; ch < values.c; ++ch) out.payload.at(y, x, ch) /= wsum;
      } else {
        for (int ch = 0; ch < values.c; ++ch) out.payload.at(y, x, ch) = 0.f;
      }
    }
  }
  return out;
}

}  // namespace mpiflow
