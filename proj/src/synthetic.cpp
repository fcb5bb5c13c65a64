#include "mpiflow/synthetic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpiflow {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

float lattice_noise(uint32_t seed, long iu, long iv, int ch) {
  uint64_t h = seed;
  h = splitmix64(h ^ static_cast<uint64_t>(iu + (1L << 30)));
  h = splitmix64(h ^ static_cast<uint64_t>(iv + (1L << 30)));
  h = splitmix64(h ^ static_cast<uint64_t>(ch));
  return static_cast<float>((h >> 11) * (1.0 / 9007199254740992.0));
}

constexpr long kNoisePeriod = 4;  // texels between lattice samples

/// Deterministic value noise: bilinear interpolation of seeded lattice values.
/// Smooth enough to survive sub-pixel resampling, locally distinct enough for
/// unambiguous correlation matching.
float texel_noise(uint32_t seed, long iu, long iv, int ch) {
  const long u0 = iu >= 0 ? iu / kNoisePeriod : (iu - kNoisePeriod + 1) / kNoisePeriod;
  const long v0 = iv >= 0 ? iv / kNoisePeriod : (iv - kNoisePeriod + 1) / kNoisePeriod;
  const float fu = static_cast<float>(iu - u0 * kNoisePeriod) / kNoisePeriod;
  const float fv = static_cast<float>(iv - v0 * kNoisePeriod) / kNoisePeriod;
  const float n00 = lattice_noise(seed, u0, v0, ch);
  const float n10 = lattice_noise(seed, u0 + 1, v0, ch);
  const float n01 = lattice_noise(seed, u0, v0 + 1, ch);
  const float n11 = lattice_noise(seed, u0 + 1, v0 + 1, ch);
  return (n00 * (1.f - fu) + n10 * fu) * (1.f - fv) + (n01 * (1.f - fu) + n11 * fu) * fv;
}

struct WorldLayer {
  // Textured plane at z = depth(t). Texture coordinates are projected pixels
  // of the canonical (identity-pose) camera relative to the layer's moving
  // origin: u = f * (X - ox(t)) / z(t). A layer translating in x-y-z then
  // shifts its appearance without rescaling, so integer motions stay exact
  // pixel copies.
  double x_origin0, y_origin0;  // world coords of the texture origin at t = 0
  double px_width, px_height;   // footprint in texture pixels (ignored for bg)
  double depth0;
  Eigen::Vector3d velocity;  // meters/frame
  uint32_t seed;
  bool is_background;
};

struct Hit {
  bool hit = false;
  double cam_depth = std::numeric_limits<double>::infinity();
  Eigen::Vector3d world_point = Eigen::Vector3d::Zero();
  const WorldLayer* layer = nullptr;
  float rgb[3] = {0, 0, 0};
};

Hit intersect(const WorldLayer& l, double t, const Eigen::Vector3d& origin,
              const Eigen::Vector3d& dir, double focal) {
  Hit h;
  const double plane_z = l.depth0 + l.velocity.z() * t;
  if (std::abs(dir.z()) < 1e-12) return h;
  const double s = (plane_z - origin.z()) / dir.z();
  if (s <= 0.0) return h;
  const Eigen::Vector3d p = origin + s * dir;
  const double ox = l.x_origin0 + l.velocity.x() * t;
  const double oy = l.y_origin0 + l.velocity.y() * t;
  const double u = focal * (p.x() - ox) / plane_z;
  const double v = focal * (p.y() - oy) / plane_z;
  // Snapped half-open footprint test: boundaries landing within 1e-9 of the
  // edge (ulp noise from the ray intersection) resolve consistently, matching
  // the texel snap below.
  if (!l.is_background &&
      (u < -1e-9 || u >= l.px_width - 1e-9 || v < -1e-9 || v >= l.px_height - 1e-9))
    return h;
  h.hit = true;
  h.world_point = p;
  const long iu = static_cast<long>(std::floor(u + 1e-9));
  const long iv = static_cast<long>(std::floor(v + 1e-9));
  for (int c = 0; c < 3; ++c) h.rgb[c] = texel_noise(l.seed, iu, iv, c);
  h.layer = &l;
  return h;
}

}  // namespace

CameraModel SyntheticScene::camera_at(int frame) const {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.intrinsics << focal, 0, width / 2.0, 0, focal, height / 2.0, 0, 0, 1;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  const Eigen::Vector3d w = camera_rotation_rate * frame;
  const double angle = w.norm();
  if (angle > 1e-15) rot = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
  const Eigen::Vector3d center = camera_velocity * frame;
  cam.pose.setIdentity();
  cam.pose.topLeftCorner<3, 3>() = rot;
  cam.pose.block<3, 1>(0, 3) = -rot * center;
  return cam;
}

RenderedSequence render_sequence(const SyntheticScene& scene) {
  // Distinct layer depths keep the z-order unambiguous.
  std::vector<double> depths{scene.background_depth};
  for (const auto& l : scene.layers) depths.push_back(l.depth);
  for (size_t i = 0; i < depths.size(); ++i)
    for (size_t j = i + 1; j < depths.size(); ++j)
      if (std::abs(depths[i] - depths[j]) < 1e-9)
        throw std::domain_error("render_sequence: layers share a depth");

  const double f = scene.focal;
  const double cx = scene.width / 2.0;
  const double cy = scene.height / 2.0;

  std::vector<WorldLayer> layers;
  {
    WorldLayer bg;
    bg.depth0 = scene.background_depth;
    // Texel grid anchored so that canonical pixel (0,0) maps to texel (0,0).
    bg.x_origin0 = (0.0 - cx) * bg.depth0 / f;
    bg.y_origin0 = (0.0 - cy) * bg.depth0 / f;
    bg.px_width = bg.px_height = 0;
    bg.velocity.setZero();
    bg.seed = scene.background_seed;
    bg.is_background = true;
    layers.push_back(bg);
  }
  for (const auto& spec : scene.layers) {
    WorldLayer l;
    l.depth0 = spec.depth;
    l.x_origin0 = (spec.x0 - cx) * spec.depth / f;
    l.y_origin0 = (spec.y0 - cy) * spec.depth / f;
    l.px_width = spec.width;
    l.px_height = spec.height;
    l.velocity = Eigen::Vector3d(spec.vx * spec.depth / f, spec.vy * spec.depth / f, spec.vz);
    l.seed = spec.texture_seed;
    l.is_background = false;
    layers.push_back(l);
  }

  RenderedSequence seq;
  for (int t = 0; t < scene.frame_count; ++t) {
    const CameraModel cam = scene.camera_at(t);
    const Eigen::Matrix3d rot = cam.pose.topLeftCorner<3, 3>();
    const Eigen::Vector3d center = -rot.transpose() * cam.pose.block<3, 1>(0, 3);
    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();

    Image frame(scene.height, scene.width, 3);
    Image depth(scene.height, scene.width, 1);
    Image flow(scene.height, scene.width, 3);

    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        const Eigen::Vector3d dir = rot.transpose() * (k_inv * Eigen::Vector3d(x, y, 1.0));
        Hit best;
        for (const auto& l : layers) {
          Hit h = intersect(l, t, center, dir, f);
          if (!h.hit) continue;
          h.cam_depth = (rot * (h.world_point - center)).z();
          if (h.cam_depth <= 0.0) continue;
          if (!best.hit || h.cam_depth < best.cam_depth) best = h;
        }
        if (!best.hit)
          throw std::runtime_error("render_sequence: ray escaped the scene");
        for (int c = 0; c < 3; ++c) frame.at(y, x, c) = best.rgb[c];
        depth.at(y, x, 0) = static_cast<float>(best.cam_depth);

        // Object-only flow to the next frame, in this camera's view: follow
        // the hit's texture point to its position at t + 1.
        const WorldLayer& wl = *best.layer;
        if (wl.velocity.isZero(0.0)) continue;  // static layers: exactly zero flow
        const double z_t = wl.depth0 + wl.velocity.z() * t;
        const double z_t1 = z_t + wl.velocity.z();
        const double ox_t = wl.x_origin0 + wl.velocity.x() * t;
        const double oy_t = wl.y_origin0 + wl.velocity.y() * t;
        const double tex_u = f * (best.world_point.x() - ox_t) / z_t;
        const double tex_v = f * (best.world_point.y() - oy_t) / z_t;
        const Eigen::Vector3d moved(ox_t + wl.velocity.x() + tex_u * z_t1 / f,
                                    oy_t + wl.velocity.y() + tex_v * z_t1 / f, z_t1);
        const Eigen::Vector3d cam_moved = rot * (moved - center);
        if (cam_moved.z() > 0.0) {
          const Eigen::Vector3d proj = cam.intrinsics * cam_moved;
          flow.at(y, x, 0) = static_cast<float>(proj.x() / proj.z() - x);
          flow.at(y, x, 1) = static_cast<float>(proj.y() / proj.z() - y);
          flow.at(y, x, 2) = static_cast<float>(cam_moved.z() - best.cam_depth);
        }
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.depths.push_back(std::move(depth));
    seq.cameras.push_back(cam);
    seq.object_flow.push_back(std::move(flow));
  }
  if (!seq.object_flow.empty()) {
    // The last frame has no successor; its flow entry is kept zero.
    Image& last = seq.object_flow.back();
    std::fill(last.data.begin(), last.data.end(), 0.f);
  }
  return seq;
}

OracleWarpResult oracle_pose_warp(const Image& frame, const Image& depth,
                                  const CameraModel& src, const CameraModel& dst) {
  if (frame.h != depth.h || frame.w != depth.w || depth.c != 1)
    throw std::invalid_argument("oracle_pose_warp: shape mismatch");
  const int th = dst.height > 0 ? dst.height : frame.h;
  const int tw = dst.width > 0 ? dst.width : frame.w;

  OracleWarpResult out;
  out.frame = Image(th, tw, frame.c);
  out.depth = Image(th, tw, 1);
  out.valid = Image(th, tw, 1);
  Image zbuf(th, tw, 1, std::numeric_limits<float>::infinity());

  for (int y = 0; y < frame.h; ++y) {
    for (int x = 0; x < frame.w; ++x) {
      const double d = depth.at(y, x, 0);
      if (d <= 0.0) continue;
      const ProjectedPoint p = reproject_point(x, y, d, FlowVector3{}, src, dst);
      if (!p.valid) continue;
      const int tx = static_cast<int>(std::lround(p.x));
      const int ty = static_cast<int>(std::lround(p.y));
      if (tx < 0 || tx >= tw || ty < 0 || ty >= th) continue;
      if (p.depth < zbuf.at(ty, tx, 0)) {
        zbuf.at(ty, tx, 0) = static_cast<float>(p.depth);
        for (int c = 0; c < frame.c; ++c) out.frame.at(ty, tx, c) = frame.at(y, x, c);
        out.depth.at(ty, tx, 0) = static_cast<float>(p.depth);
        out.valid.at(ty, tx, 0) = 1.f;
      }
    }
  }
  return out;
}

}  // namespace mpiflow
