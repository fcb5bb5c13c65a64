#include "mpiflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpiflow/metrics.hpp"

namespace mpiflow {

namespace {

constexpr float kOccupancyThreshold = 0.5f;

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

float bilinear_sample(const Volume& vol, int zi, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  double acc = 0.0;
  const int xs[2] = {clampi(x0, 0, vol.w - 1), clampi(x0 + 1, 0, vol.w - 1)};
  const int ys[2] = {clampi(y0, 0, vol.h - 1), clampi(y0 + 1, 0, vol.h - 1)};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) acc += wy[j] * wx[i] * vol.at(zi, ys[j], xs[i]);
  return static_cast<float>(acc);
}

}  // namespace

Flow3D Flow3D::zero(int z, int h, int w, int s_z) {
  Flow3D f;
  f.s_z = s_z;
  f.xy = Volume4(z, h, w, 2);
  f.depth_dist = Volume4(z, h, w, 2 * s_z + 1);
  for (int zi = 0; zi < z; ++zi)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) f.depth_dist.at(zi, y, x, s_z) = 1.f;
  return f;
}

float expected_shift(const Flow3D& flow, int zi, int y, int x) {
  float e = 0.f;
  for (int b = 0; b < flow.bins(); ++b)
    e += flow.depth_dist.at(zi, y, x, b) * static_cast<float>(b - flow.s_z);
  return e;
}

Volume4 reduce_flow_to_real(const Flow3D& flow, const std::vector<double>& plane_depths) {
  const int Z = flow.xy.z, H = flow.xy.h, W = flow.xy.w;
  if (static_cast<int>(plane_depths.size()) != Z)
    throw std::invalid_argument("reduce_flow_to_real: plane table mismatch");
  Volume4 out(Z, H, W, 3);
  for (int zi = 0; zi < Z; ++zi) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        out.at(zi, y, x, 0) = flow.xy.at(zi, y, x, 0);
        out.at(zi, y, x, 1) = flow.xy.at(zi, y, x, 1);
        double expd = 0.0;
        for (int b = 0; b < flow.bins(); ++b) {
          const int zt = clampi(zi + b - flow.s_z, 0, Z - 1);
          expd += flow.depth_dist.at(zi, y, x, b) * plane_depths[zt];
        }
        out.at(zi, y, x, 2) = static_cast<float>(expd - plane_depths[zi]);
      }
    }
  }
  return out;
}

std::pair<Feature, Volume> partial_conv3(const Feature& input, const Volume& mask,
                                         const ConvWeights& layer, Stride3 stride,
                                         Pad3 pad) {
  if (layer.kz <= 0 || layer.ky <= 0 || layer.kx <= 0)
    throw std::invalid_argument("partial_conv3: zero-size kernel");
  if (stride.x <= 0 || stride.y <= 0 || stride.z <= 0)
    throw std::invalid_argument("partial_conv3: invalid stride");
  if (input.c != layer.in_c || mask.z != input.z || mask.h != input.h || mask.w != input.w)
    throw std::invalid_argument("partial_conv3: shape mismatch");

  const int oz = (input.z + 2 * pad.z - layer.kz) / stride.z + 1;
  const int oh = (input.h + 2 * pad.y - layer.ky) / stride.y + 1;
  const int ow = (input.w + 2 * pad.x - layer.kx) / stride.x + 1;
  if (oz <= 0 || oh <= 0 || ow <= 0)
    throw std::invalid_argument("partial_conv3: output would be empty");

  Feature out(layer.out_c, oz, oh, ow);
  Volume out_mask(oz, oh, ow);
  const float kernel_size = static_cast<float>(layer.kz * layer.ky * layer.kx);

  for (int z = 0; z < oz; ++z) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int z0 = z * stride.z - pad.z;
        const int y0 = y * stride.y - pad.y;
        const int x0 = x * stride.x - pad.x;

        // Zero-padding positions count as valid (they contribute zero), so on
        // an all-ones mask the renormalization factor is exactly 1 and the
        // layer reduces to a dense convolution.
        int valid = 0;
        int invalid_inside = 0;
        for (int kz = 0; kz < layer.kz; ++kz) {
          const int iz = z0 + kz;
          if (iz < 0 || iz >= input.z) continue;
          for (int ky = 0; ky < layer.ky; ++ky) {
            const int iy = y0 + ky;
            if (iy < 0 || iy >= input.h) continue;
            for (int kx = 0; kx < layer.kx; ++kx) {
              const int ix = x0 + kx;
              if (ix < 0 || ix >= input.w) continue;
              if (mask.at(iz, iy, ix) > 0.f)
                ++valid;
              else
                ++invalid_inside;
            }
          }
        }
        if (valid > 0) {
          const float scale =
              kernel_size / static_cast<float>(kernel_size - invalid_inside);
          for (int oc = 0; oc < layer.out_c; ++oc) {
            double acc = 0.0;
            for (int ic = 0; ic < layer.in_c; ++ic) {
              for (int kz = 0; kz < layer.kz; ++kz) {
                const int iz = z0 + kz;
                if (iz < 0 || iz >= input.z) continue;
                for (int ky = 0; ky < layer.ky; ++ky) {
                  const int iy = y0 + ky;
                  if (iy < 0 || iy >= input.h) continue;
                  for (int kx = 0; kx < layer.kx; ++kx) {
                    const int ix = x0 + kx;
                    if (ix < 0 || ix >= input.w) continue;
                    if (mask.at(iz, iy, ix) <= 0.f) continue;
                    acc += static_cast<double>(layer.at(oc, ic, kz, ky, kx)) *
                           input.at(ic, iz, iy, ix);
                  }
                }
              }
            }
            out.at(oc, z, y, x) = static_cast<float>(acc * scale + layer.bias[oc]);
          }
        }

        // Occupancy sampled at the receptive-field center, no dilation.
        const int cz = z0 + (layer.kz - 1) / 2;
        const int cy = y0 + (layer.ky - 1) / 2;
        const int cx = x0 + (layer.kx - 1) / 2;
        if (cz >= 0 && cz < input.z && cy >= 0 && cy < input.h && cx >= 0 && cx < input.w)
          out_mask.at(z, y, x) = mask.at(cz, cy, cx) > 0.f ? 1.f : 0.f;
      }
    }
  }
  return {std::move(out), std::move(out_mask)};
}

Feature conv3(const Feature& input, const ConvWeights& layer, Stride3 stride, Pad3 pad) {
  if (input.c != layer.in_c) throw std::invalid_argument("conv3: channel mismatch");
  const int oz = (input.z + 2 * pad.z - layer.kz) / stride.z + 1;
  const int oh = (input.h + 2 * pad.y - layer.ky) / stride.y + 1;
  const int ow = (input.w + 2 * pad.x - layer.kx) / stride.x + 1;
  if (oz <= 0 || oh <= 0 || ow <= 0) throw std::invalid_argument("conv3: output would be empty");
  Feature out(layer.out_c, oz, oh, ow);
  for (int z = 0; z < oz; ++z) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int z0 = z * stride.z - pad.z;
        const int y0 = y * stride.y - pad.y;
        const int x0 = x * stride.x - pad.x;
        for (int oc = 0; oc < layer.out_c; ++oc) {
          // Bias is added after the sum, matching partial_conv3's accumulation
          // order so the two are bit-identical on fully valid masks.
          double acc = 0.0;
          for (int ic = 0; ic < layer.in_c; ++ic)
            for (int kz = 0; kz < layer.kz; ++kz) {
              const int iz = z0 + kz;
              if (iz < 0 || iz >= input.z) continue;
              for (int ky = 0; ky < layer.ky; ++ky) {
                const int iy = y0 + ky;
                if (iy < 0 || iy >= input.h) continue;
                for (int kx = 0; kx < layer.kx; ++kx) {
                  const int ix = x0 + kx;
                  if (ix < 0 || ix >= input.w) continue;
                  acc += static_cast<double>(layer.at(oc, ic, kz, ky, kx)) *
                         input.at(ic, iz, iy, ix);
                }
              }
            }
          out.at(oc, z, y, x) = static_cast<float>(acc + layer.bias[oc]);
        }
      }
    }
  }
  return out;
}

CostVolume masked_correlation(const Feature& h1, const Volume& mask1, const Feature& h2,
                              const Volume& mask2, int radius_xy, int s_z) {
  if (h1.c != h2.c || h1.z != h2.z || h1.h != h2.h || h1.w != h2.w)
    throw std::invalid_argument("masked_correlation: feature shape mismatch");
  if (radius_xy >= std::min(h1.h, h1.w) || s_z >= h1.z || radius_xy < 0 || s_z < 0)
    throw std::domain_error("masked_correlation: search window exceeds volume");

  const int side = 2 * radius_xy + 1;
  const int nd = side * side * (2 * s_z + 1);
  CostVolume cv;
  cv.radius_xy = radius_xy;
  cv.s_z = s_z;
  cv.scores = Volume4(h1.z, h1.h, h1.w, nd);
  cv.validity = Volume4(h1.z, h1.h, h1.w, nd);

  for (int z = 0; z < h1.z; ++z) {
    for (int y = 0; y < h1.h; ++y) {
      for (int x = 0; x < h1.w; ++x) {
        const float m1 = mask1.at(z, y, x) > 0.f ? 1.f : 0.f;
        int d = 0;
        for (int dz = -s_z; dz <= s_z; ++dz) {
          const int z2 = z + dz;
          for (int dy = -radius_xy; dy <= radius_xy; ++dy) {
            const int y2 = y + dy;
            for (int dx = -radius_xy; dx <= radius_xy; ++dx, ++d) {
              const int x2 = x + dx;
              if (z2 < 0 || z2 >= h1.z || y2 < 0 || y2 >= h1.h || x2 < 0 || x2 >= h1.w)
                continue;
              const float m2 = mask2.at(z2, y2, x2) > 0.f ? 1.f : 0.f;
              const float valid = m1 * m2;
              if (valid == 0.f) continue;
              float score = 0.f;
              for (int c = 0; c < h1.c; ++c)
                score += h1.at(c, z, y, x) * h2.at(c, z2, y2, x2);
              cv.scores.at(z, y, x, d) = score / static_cast<float>(h1.c);
              cv.validity.at(z, y, x, d) = 1.f;
            }
          }
        }
      }
    }
  }
  return cv;
}

Flow3D compose_residual_flow(const Flow3D& prev, const Flow3D& residual) {
  if (!prev.xy.same_shape(residual.xy) || prev.s_z != residual.s_z)
    throw std::invalid_argument("compose_residual_flow: shape mismatch");
  const int Z = prev.xy.z, H = prev.xy.h, W = prev.xy.w;
  const int sz = prev.s_z;
  const int bins = prev.bins();

  Flow3D out;
  out.s_z = sz;
  out.xy = Volume4(Z, H, W, 2);
  out.depth_dist = Volume4(Z, H, W, bins);

  for (int zi = 0; zi < Z; ++zi) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const float rx = residual.xy.at(zi, y, x, 0);
        const float ry = residual.xy.at(zi, y, x, 1);
        out.xy.at(zi, y, x, 0) = prev.xy.at(zi, y, x, 0) + rx;
        out.xy.at(zi, y, x, 1) = prev.xy.at(zi, y, x, 1) + ry;

        // Convolve the residual distribution with the previous one sampled at
        // the displaced location; total shifts clamp into the window.
        const double sx = x + rx;
        const double sy = y + ry;
        std::vector<double> acc(bins, 0.0);
        for (int rb = 0; rb < bins; ++rb) {
          const float pr = residual.depth_dist.at(zi, y, x, rb);
          if (pr == 0.f) continue;
          const int shift_r = rb - sz;
          const int zp = clampi(zi + shift_r, 0, Z - 1);
          for (int pb = 0; pb < bins; ++pb) {
            // bilinear sample of the previous distribution bin pb
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0;
            const double fy = sy - y0;
            double val = 0.0;
            const int xs[2] = {clampi(x0, 0, W - 1), clampi(x0 + 1, 0, W - 1)};
            const int ys[2] = {clampi(y0, 0, H - 1), clampi(y0 + 1, 0, H - 1)};
            const double wx[2] = {1.0 - fx, fx};
            const double wy[2] = {1.0 - fy, fy};
            for (int j = 0; j < 2; ++j)
              for (int i = 0; i < 2; ++i)
                val += wy[j] * wx[i] * prev.depth_dist.at(zp, ys[j], xs[i], pb);
            if (val == 0.0) continue;
            const int total = clampi(shift_r + (pb - sz), -sz, sz);
            acc[total + sz] += pr * val;
          }
        }
        double sum = 0.0;
        for (double v : acc) sum += v;
        if (sum <= 0.0) {
          out.depth_dist.at(zi, y, x, sz) = 1.f;
        } else {
          for (int b = 0; b < bins; ++b)
            out.depth_dist.at(zi, y, x, b) = static_cast<float>(acc[b] / sum);
        }
      }
    }
  }
  return out;
}

namespace {

struct MatcherLevel {
  Feature feat;  // 3 channels: centered color, zeroed where unoccupied
  Volume mask;
};

MatcherLevel matcher_base(const MultiPlaneImage& m) {
  const int Z = m.planes(), H = m.height(), W = m.width();
  MatcherLevel lvl;
  lvl.feat = Feature(3, Z, H, W);
  lvl.mask = Volume(Z, H, W);
  for (int z = 0; z < Z; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (m.alpha.at(z, y, x) >= kOccupancyThreshold) {
          lvl.mask.at(z, y, x) = 1.f;
          for (int c = 0; c < 3; ++c)
            lvl.feat.at(c, z, y, x) = m.color.at(z, y, x, c) - 0.5f;
        }
  return lvl;
}

MatcherLevel downsample2(const MatcherLevel& in) {
  const int Z = in.mask.z;
  const int H = (in.mask.h + 1) / 2;
  const int W = (in.mask.w + 1) / 2;
  MatcherLevel out;
  out.feat = Feature(3, Z, H, W);
  out.mask = Volume(Z, H, W);
  for (int z = 0; z < Z; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        float sum[3] = {0, 0, 0};
        int n = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int yy = 2 * y + dy, xx = 2 * x + dx;
            if (yy >= in.mask.h || xx >= in.mask.w) continue;
            if (in.mask.at(z, yy, xx) <= 0.f) continue;
            ++n;
            for (int c = 0; c < 3; ++c) sum[c] += in.feat.at(c, z, yy, xx);
          }
        if (n > 0) {
          out.mask.at(z, y, x) = 1.f;
          for (int c = 0; c < 3; ++c) out.feat.at(c, z, y, x) = sum[c] / n;
        }
      }
    }
  }
  return out;
}

MatcherLevel warp_level(const MatcherLevel& src, const Flow3D& flow) {
  const int Z = src.mask.z, H = src.mask.h, W = src.mask.w;
  MatcherLevel out;
  out.feat = Feature(3, Z, H, W);
  out.mask = Volume(Z, H, W);
  for (int z = 0; z < Z; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double sx = x + flow.xy.at(z, y, x, 0);
        const double sy = y + flow.xy.at(z, y, x, 1);
        const int sz = clampi(z + static_cast<int>(std::lround(expected_shift(flow, z, y, x))),
                              0, Z - 1);
        const int nx = static_cast<int>(std::lround(sx));
        const int ny = static_cast<int>(std::lround(sy));
        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
        if (src.mask.at(sz, ny, nx) <= 0.f) continue;
        out.mask.at(z, y, x) = 1.f;
        for (int c = 0; c < 3; ++c) out.feat.at(c, z, y, x) = src.feat.at(c, sz, ny, nx);
      }
    }
  }
  return out;
}

}  // namespace

Flow3D upsample_flow2(const Flow3D& in, int target_h, int target_w) {
  Flow3D out;
  out.s_z = in.s_z;
  out.xy = Volume4(in.xy.z, target_h, target_w, 2);
  out.depth_dist = Volume4(in.xy.z, target_h, target_w, in.bins());
  for (int z = 0; z < in.xy.z; ++z) {
    for (int y = 0; y < target_h; ++y) {
      for (int x = 0; x < target_w; ++x) {
        const int sy = std::min(y / 2, in.xy.h - 1);
        const int sx = std::min(x / 2, in.xy.w - 1);
        out.xy.at(z, y, x, 0) = 2.f * in.xy.at(z, sy, sx, 0);
        out.xy.at(z, y, x, 1) = 2.f * in.xy.at(z, sy, sx, 1);
        for (int b = 0; b < in.bins(); ++b)
          out.depth_dist.at(z, y, x, b) = in.depth_dist.at(z, sy, sx, b);
      }
    }
  }
  return out;
}

namespace {

// Aggregation window for cost scores around each voxel, within the plane.
constexpr int kAggRadius = 2;

}  // namespace

Flow3D estimate_flow_matcher(const MultiPlaneImage& ref, const MultiPlaneImage& src,
                             const MatcherConfig& config) {
  if (ref.plane_depths.size() != src.plane_depths.size())
    throw std::domain_error("estimate_flow_matcher: plane table mismatch");
  for (size_t i = 0; i < ref.plane_depths.size(); ++i)
    if (std::abs(ref.plane_depths[i] - src.plane_depths[i]) > 1e-9 * ref.plane_depths[i])
      throw std::domain_error("estimate_flow_matcher: plane table mismatch");
  if (config.levels < 1) throw std::invalid_argument("estimate_flow_matcher: levels < 1");

  std::vector<MatcherLevel> ref_pyr{matcher_base(ref)};
  std::vector<MatcherLevel> src_pyr{matcher_base(src)};
  for (int l = 1; l < config.levels; ++l) {
    ref_pyr.push_back(downsample2(ref_pyr.back()));
    src_pyr.push_back(downsample2(src_pyr.back()));
  }

  const int Z = ref.planes();
  const int sz = config.s_z;
  const int bins = 2 * sz + 1;
  const int side = 2 * config.radius_xy + 1;

  Flow3D flow = Flow3D::zero(Z, ref_pyr.back().mask.h, ref_pyr.back().mask.w, sz);

  for (int l = config.levels - 1; l >= 0; --l) {
    const MatcherLevel& rl = ref_pyr[l];
    const MatcherLevel& sl = src_pyr[l];
    const int H = rl.mask.h, W = rl.mask.w;
    if (flow.xy.h != H || flow.xy.w != W) flow = upsample_flow2(flow, H, W);

    const MatcherLevel warped = warp_level(sl, flow);

    // Candidate integer residuals, nearest displacements first so an exact
    // match at zero wins all ties.
    struct Cand {
      int dz, dy, dx;
    };
    std::vector<Cand> cands;
    for (int dz = -sz; dz <= sz; ++dz)
      for (int dy = -config.radius_xy; dy <= config.radius_xy; ++dy)
        for (int dx = -config.radius_xy; dx <= config.radius_xy; ++dx)
          cands.push_back({dz, dy, dx});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      const int ra = a.dz * a.dz * 4 + a.dy * a.dy + a.dx * a.dx;
      const int rb = b.dz * b.dz * 4 + b.dy * b.dy + b.dx * b.dx;
      return ra < rb;
    });

    // Mean masked SSD aggregated over an in-plane window per candidate; the
    // minimum is exactly zero at a perfect match, so integer motions within
    // the search range are recovered exactly.
    Volume4 residual_xy(Z, H, W, 2);
    Volume4 residual_b(Z, H, W, bins);
    Volume matched(Z, H, W);
    for (int z = 0; z < Z; ++z) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          residual_b.at(z, y, x, sz) = 1.f;
          if (rl.mask.at(z, y, x) <= 0.f) continue;
          const Cand* best = nullptr;
          double best_score = 0.0;
          for (const Cand& cand : cands) {
            const int zz = z + cand.dz;
            if (zz < 0 || zz >= Z) continue;
            double score = 0.0;
            int n = 0;
            for (int ay = -kAggRadius; ay <= kAggRadius; ++ay) {
              const int yy = y + ay;
              const int ty = yy + cand.dy;
              if (yy < 0 || yy >= H || ty < 0 || ty >= H) continue;
              for (int ax = -kAggRadius; ax <= kAggRadius; ++ax) {
                const int xx = x + ax;
                const int tx = xx + cand.dx;
                if (xx < 0 || xx >= W || tx < 0 || tx >= W) continue;
                if (rl.mask.at(z, yy, xx) <= 0.f || warped.mask.at(zz, ty, tx) <= 0.f) continue;
                for (int c = 0; c < 3; ++c) {
                  const double d = rl.feat.at(c, z, yy, xx) - warped.feat.at(c, zz, ty, tx);
                  score += d * d;
                }
                ++n;
              }
            }
            if (n == 0) continue;
            score /= n;
            if (best == nullptr || score < best_score) {
              best = &cand;
              best_score = score;
            }
          }
          if (best == nullptr) continue;  // no valid comparison: inherit coarser flow
          matched.at(z, y, x) = 1.f;
          residual_xy.at(z, y, x, 0) = static_cast<float>(best->dx);
          residual_xy.at(z, y, x, 1) = static_cast<float>(best->dy);
          residual_b.at(z, y, x, sz) = 0.f;
          residual_b.at(z, y, x, best->dz + sz) = 1.f;
        }
      }
    }

    // 3x3 median filter of the x-y residual within each plane, over matched voxels.
    Flow3D residual;
    residual.s_z = sz;
    residual.xy = Volume4(Z, H, W, 2);
    residual.depth_dist = residual_b;
    for (int z = 0; z < Z; ++z) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          if (matched.at(z, y, x) <= 0.f) continue;
          for (int comp = 0; comp < 2; ++comp) {
            std::vector<float> vals;
            vals.reserve(9);
            for (int ay = -1; ay <= 1; ++ay) {
              const int yy = y + ay;
              if (yy < 0 || yy >= H) continue;
              for (int ax = -1; ax <= 1; ++ax) {
                const int xx = x + ax;
                if (xx < 0 || xx >= W) continue;
                if (matched.at(z, yy, xx) <= 0.f) continue;
                vals.push_back(residual_xy.at(z, yy, xx, comp));
              }
            }
            std::sort(vals.begin(), vals.end());
            residual.xy.at(z, y, x, comp) = vals[(vals.size() - 1) / 2];
          }
        }
      }
    }

    flow = compose_residual_flow(flow, residual);
  }
  return flow;
}

Volume occlusion_mask(const MultiPlaneImage& ref, const Flow3D& flow) {
  const int Z = ref.planes(), H = ref.height(), W = ref.width();
  if (flow.xy.z != Z || flow.xy.h != H || flow.xy.w != W)
    throw std::invalid_argument("occlusion_mask: flow shape mismatch");

  CameraModel cam;
  cam.width = W;
  cam.height = H;

  const Volume4 real_flow = reduce_flow_to_real(flow, ref.plane_depths);
  const MultiPlaneImage warped = warp_mpi(ref, cam, cam, &real_flow, ref.plane_depths);
  const Volume vis = visibility_mask(warped);

  Volume occ(Z, H, W);
  for (int z = 0; z < Z; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const int zt =
            clampi(z + static_cast<int>(std::lround(expected_shift(flow, z, y, x))), 0, Z - 1);
        const float v = bilinear_sample(vis, zt, x + flow.xy.at(z, y, x, 0),
                                        y + flow.xy.at(z, y, x, 1));
        occ.at(z, y, x) = v > 0.5f ? 1.f : 0.f;
      }
    }
  }
  return occ;
}

double photometric_loss(const MultiPlaneImage& ref, const MultiPlaneImage& recon,
                        const Volume& occ, double beta) {
  const int Z = ref.planes(), H = ref.height(), W = ref.width();
  if (recon.planes() != Z || recon.height() != H || recon.width() != W ||
      !occ.same_shape(ref.alpha))
    throw std::invalid_argument("photometric_loss: shape mismatch");
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("photometric_loss: beta range");

  double total = 0.0;
  for (int z = 0; z < Z; ++z) {
    Image a(H, W, 3), b(H, W, 3);
    double mae = 0.0;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const float m = occ.at(z, y, x);
        for (int c = 0; c < 3; ++c) {
          const float va = ref.color.at(z, y, x, c) * m;
          const float vb = recon.color.at(z, y, x, c) * m;
          a.at(y, x, c) = va;
          b.at(y, x, c) = vb;
          mae += std::abs(static_cast<double>(ref.color.at(z, y, x, c)) -
                          recon.color.at(z, y, x, c)) *
                 m;
        }
      }
    }
    mae /= static_cast<double>(H) * W * 3;
    const double s = ssim(a, b);
    total += beta * mae + (1.0 - beta) * (1.0 - s) / 2.0;
  }
  return total / Z;
}

double smoothness_loss(const Flow3D& flow, const MultiPlaneImage& ref, double edge_weight_a) {
  const int Z = ref.planes(), H = ref.height(), W = ref.width();
  if (flow.xy.z != Z || flow.xy.h != H || flow.xy.w != W)
    throw std::invalid_argument("smoothness_loss: shape mismatch");
  const Volume4 u = reduce_flow_to_real(flow, ref.plane_depths);

  double total = 0.0;
  long count = 0;
  for (int z = 0; z < Z; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const int nxt[2][2] = {{y, x + 1}, {y + 1, x}};
        for (int axis = 0; axis < 2; ++axis) {
          const int yy = nxt[axis][0], xx = nxt[axis][1];
          if (yy >= H || xx >= W) continue;
          const double ga = std::abs(static_cast<double>(ref.alpha.at(z, yy, xx)) -
                                     ref.alpha.at(z, y, x));
          double gc = 0.0, gu = 0.0;
          for (int c = 0; c < 3; ++c)
            gc += std::abs(static_cast<double>(ref.color.at(z, yy, xx, c)) -
                           ref.color.at(z, y, x, c));
          gc /= 3.0;
          for (int c = 0; c < 3; ++c)
            gu += std::abs(static_cast<double>(u.at(z, yy, xx, c)) - u.at(z, y, x, c));
          gu /= 3.0;
          total += (1.0 - ga) * std::exp(-edge_weight_a * gc) * gu;
          ++count;
        }
      }
    }
  }
  return count > 0 ? total / count : 0.0;
}

double total_flow_loss(double photometric, double smoothness, double lambda) {
  return photometric + lambda * smoothness;
}

Volume4 extrapolate_flow(const Volume4& real_flow, int k, int k_prime) {
  if (k < 1) throw std::domain_error("extrapolate_flow: k must be >= 1");
  if (real_flow.c != 3) throw std::invalid_argument("extrapolate_flow: expected 3 components");
  const float scale = -static_cast<float>(k_prime) / static_cast<float>(k);
  Volume4 out = real_flow;
  for (float& v : out.data) v *= scale;
  return out;
}

Image flow_to_pixel_flow(const Volume4& real_flow, const MultiPlaneImage& ref) {
  const int Z = ref.planes(), H = ref.height(), W = ref.width();
  if (real_flow.z != Z || real_flow.h != H || real_flow.w != W)
    throw std::invalid_argument("flow_to_pixel_flow: shape mismatch");
  Image out(H, W, 2);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int z = 0; z < Z; ++z) {
        if (ref.alpha.at(z, y, x) >= kOccupancyThreshold) {
          out.at(y, x, 0) = real_flow.at(z, y, x, 0);
          out.at(y, x, 1) = real_flow.at(z, y, x, 1);
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace mpiflow
