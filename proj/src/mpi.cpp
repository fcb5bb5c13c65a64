#include "mpiflow/mpi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpiflow {

namespace {

// Snaps coordinates that are within rounding noise of an integer so that
// integer-displacement warps stay exact through the bilinear kernel.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

std::vector<double> make_plane_depths(double d_min, double d_max, int num_planes) {
  if (num_planes < 2) throw std::domain_error("make_plane_depths: need at least 2 planes");
  if (d_min <= 0.0 || d_max < d_min)
    throw std::domain_error("make_plane_depths: invalid depth range");
  if (d_max - d_min < 1e-12 * d_max) {
    d_min *= (1.0 - 1e-3);
    d_max *= (1.0 + 1e-3);
  }
  const double inv_near = 1.0 / d_min;
  const double inv_far = 1.0 / d_max;
  std::vector<double> depths(num_planes);
  for (int i = 0; i < num_planes; ++i) {
    const double inv = inv_near + (inv_far - inv_near) * i / (num_planes - 1);
    depths[i] = 1.0 / inv;
  }
  return depths;
}

int nearest_plane(double depth, const std::vector<double>& plane_depths) {
  const double inv = 1.0 / depth;
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < plane_depths.size(); ++i) {
    const double dist = std::abs(inv - 1.0 / plane_depths[i]);
    if (dist < best_dist) {  // ties keep the earlier (nearer) plane
      best_dist = dist;
      best = static_cast<int>(i);
    }
  }
  return best;
}

MultiPlaneImage build_mpi(const Image& rgb, const Image& depth, int num_planes,
                          std::optional<std::pair<double, double>> depth_range) {
  if (depth.h != rgb.h || depth.w != rgb.w || depth.c != 1 || rgb.c != 3)
    throw std::invalid_argument("build_mpi: shape mismatch");

  double d_min = std::numeric_limits<double>::infinity();
  double d_max = 0.0;
  for (float d : depth.data) {
    if (d <= 0.f) throw std::domain_error("build_mpi: non-positive depth");
    d_min = std::min(d_min, static_cast<double>(d));
    d_max = std::max(d_max, static_cast<double>(d));
  }
  double lo, hi;
  if (depth_range) {
    lo = depth_range->first;
    hi = depth_range->second;
    if (lo > d_min || hi < d_max)
      throw std::domain_error("build_mpi: depth_range does not cover the depth map");
    if (hi - lo < 1e-12 * hi) {
      lo *= (1.0 - 1e-3);
      hi *= (1.0 + 1e-3);
    }
  } else {
    lo = d_min * (1.0 - 1e-3);
    hi = d_max * (1.0 + 1e-3);
  }
  return build_mpi_on_planes(rgb, depth, make_plane_depths(lo, hi, num_planes));
}

MultiPlaneImage build_mpi_on_planes(const Image& rgb, const Image& depth,
                                    const std::vector<double>& plane_depths) {
  if (depth.h != rgb.h || depth.w != rgb.w || depth.c != 1 || rgb.c != 3)
    throw std::invalid_argument("build_mpi: shape mismatch");
  const int Z = static_cast<int>(plane_depths.size());
  MultiPlaneImage m;
  m.plane_depths = plane_depths;
  m.color = Volume4(Z, rgb.h, rgb.w, 3);
  m.depth = Volume(Z, rgb.h, rgb.w);
  m.alpha = Volume(Z, rgb.h, rgb.w);
  for (int y = 0; y < rgb.h; ++y) {
    for (int x = 0; x < rgb.w; ++x) {
      const float d = depth.at(y, x, 0);
      if (d <= 0.f) throw std::domain_error("build_mpi: non-positive depth");
      const int zi = nearest_plane(d, plane_depths);
      m.alpha.at(zi, y, x) = 1.f;
      m.depth.at(zi, y, x) = d;
      for (int ch = 0; ch < 3; ++ch) m.color.at(zi, y, x, ch) = rgb.at(y, x, ch);
    }
  }
  return m;
}

CompositeResult alpha_composite(const MultiPlaneImage& mpi) {
  const int Z = mpi.planes(), H = mpi.height(), W = mpi.width();
  CompositeResult out;
  out.rgb = Image(H, W, 3);
  out.hole_mask = Image(H, W, 1);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      float trans = 1.f;
      float acc_alpha = 0.f;
      float rgb[3] = {0.f, 0.f, 0.f};
      for (int zi = 0; zi < Z; ++zi) {  // front to back
        const float a = mpi.alpha.at(zi, y, x);
        if (a > 0.f) {
          const float wgt = a * trans;
          for (int ch = 0; ch < 3; ++ch) rgb[ch] += wgt * mpi.color.at(zi, y, x, ch);
          acc_alpha += wgt;
          trans *= (1.f - a);
        }
      }
      for (int ch = 0; ch < 3; ++ch) out.rgb.at(y, x, ch) = rgb[ch];
      out.hole_mask.at(y, x, 0) = acc_alpha < 0.5f ? 1.f : 0.f;
    }
  }
  return out;
}

MultiPlaneImage warp_mpi(const MultiPlaneImage& mpi, const CameraModel& src,
                         const CameraModel& dst, const Volume4* local_flow,
                         const std::vector<double>& target_plane_depths) {
  const int Z = mpi.planes(), H = mpi.height(), W = mpi.width();
  if (local_flow &&
      (local_flow->z != Z || local_flow->h != H || local_flow->w != W || local_flow->c != 3))
    throw std::invalid_argument("warp_mpi: local flow shape mismatch");
  if (target_plane_depths.size() < 2)
    throw std::invalid_argument("warp_mpi: invalid target plane table");

  const int Zt = static_cast<int>(target_plane_depths.size());
  const int Ht = dst.height > 0 ? dst.height : H;
  const int Wt = dst.width > 0 ? dst.width : W;

  MultiPlaneImage out;
  out.plane_depths = target_plane_depths;
  out.color = Volume4(Zt, Ht, Wt, 3);
  out.depth = Volume(Zt, Ht, Wt);
  out.alpha = Volume(Zt, Ht, Wt);
  Volume weight(Zt, Ht, Wt);

  for (int zi = 0; zi < Z; ++zi) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const float a = mpi.alpha.at(zi, y, x);
        if (a <= 0.f) continue;
        FlowVector3 u;
        if (local_flow) {
          u.dx = local_flow->at(zi, y, x, 0);
          u.dy = local_flow->at(zi, y, x, 1);
          u.dz = local_flow->at(zi, y, x, 2);
        }
        const double d = mpi.depth.at(zi, y, x);
        if (d + u.dz <= 0.0) continue;  // degenerate voxel, dropped
        const ProjectedPoint p = reproject_point(x, y, d, u, src, dst);
        if (!p.valid || p.depth <= 0.0) continue;
        const double tx = snap(p.x);
        const double ty = snap(p.y);
        const int zt = nearest_plane(p.depth, target_plane_depths);

        const int x0 = static_cast<int>(std::floor(tx));
        const int y0 = static_cast<int>(std::floor(ty));
        const double fx = tx - x0;
        const double fy = ty - y0;
        const double kw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
        const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
        for (int t = 0; t < 4; ++t) {
          if (kw[t] == 0.0) continue;
          if (xs[t] < 0 || xs[t] >= Wt || ys[t] < 0 || ys[t] >= Ht) continue;
          const float sw = static_cast<float>(kw[t] * a);
          weight.at(zt, ys[t], xs[t]) += sw;
          out.depth.at(zt, ys[t], xs[t]) += sw * static_cast<float>(p.depth);
          for (int ch = 0; ch < 3; ++ch)
            out.color.at(zt, ys[t], xs[t], ch) += sw * mpi.color.at(zi, y, x, ch);
        }
      }
    }
  }

  for (int zi = 0; zi < Zt; ++zi) {
    for (int y = 0; y < Ht; ++y) {
      for (int x = 0; x < Wt; ++x) {
        const float wsum = weight.at(zi, y, x);
        if (wsum > kSplatWeightEps) {
          out.depth.at(zi, y, x) /= wsum;
          for (int ch = 0; ch < 3; ++ch) out.color.at(zi, y, x, ch) /= wsum;
          out.alpha.at(zi, y, x) = std::min(wsum, 1.f);
        } else {
          out.depth.at(zi, y, x) = 0.f;
          for (int ch = 0; ch < 3; ++ch) out.color.at(zi, y, x, ch) = 0.f;
          out.alpha.at(zi, y, x) = 0.f;
        }
      }
    }
  }
  return out;
}

Volume visibility_mask(const MultiPlaneImage& mpi) {
  const int Z = mpi.planes(), H = mpi.height(), W = mpi.width();
  Volume v(Z, H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      float trans = 1.f;
      for (int zi = 0; zi < Z; ++zi) {
        v.at(zi, y, x) = trans;
        trans *= (1.f - mpi.alpha.at(zi, y, x));
      }
    }
  }
  return v;
}

}  // namespace mpiflow
