#pragma once

#include <utility>
#include <vector>

#include "mpiflow/mpi.hpp"
#include "mpiflow/tensor.hpp"

namespace mpiflow {

/// 3D object-motion field over an MPI grid: real x-y displacements plus a
/// categorical distribution over depth-plane shifts z' in [-s_z, s_z].
struct Flow3D {
  Volume4 xy;          // z,h,w,2 pixel displacements
  Volume4 depth_dist;  // z,h,w,(2*s_z+1), rows sum to 1
  int s_z = 1;

  static Flow3D zero(int z, int h, int w, int s_z);
  int bins() const { return 2 * s_z + 1; }
};

/// Real-valued reduction: x-y copied, depth component is the b-weighted
/// expectation of plane depths (window clamped at the boundary planes) minus
/// the current plane depth. Returns z,h,w,3.
Volume4 reduce_flow_to_real(const Flow3D& flow, const std::vector<double>& plane_depths);

/// Expected depth-plane shift E[z'] at a voxel.
float expected_shift(const Flow3D& flow, int zi, int y, int x);

struct Stride3 {
  int x = 1, y = 1, z = 1;
};
struct Pad3 {
  int x = 0, y = 0, z = 0;
};

/// One convolution layer's parameters, row-major (oc, ic, kz, ky, kx).
struct ConvWeights {
  int out_c = 0, in_c = 0, kz = 0, ky = 0, kx = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  ConvWeights() = default;
  ConvWeights(int oc, int ic, int kz_, int ky_, int kx_)
      : out_c(oc), in_c(ic), kz(kz_), ky(ky_), kx(kx_),
        weights(static_cast<size_t>(oc) * ic * kz_ * ky_ * kx_, 0.f), bias(oc, 0.f) {}

  float& at(int oc, int ic, int z, int y, int x) {
    return weights[((((static_cast<size_t>(oc) * in_c) + ic) * kz + z) * ky + y) * kx + x];
  }
  float at(int oc, int ic, int z, int y, int x) const {
    return weights[((((static_cast<size_t>(oc) * in_c) + ic) * kz + z) * ky + y) * kx + x];
  }
};

/// 3D partial convolution: convolves only over voxels where mask = 1, with
/// renormalization |K| / sum(M). The output mask is the input occupancy
/// sampled at the strided receptive-field centers, never dilated.
std::pair<Feature, Volume> partial_conv3(const Feature& input, const Volume& mask,
                                         const ConvWeights& layer, Stride3 stride,
                                         Pad3 pad);

/// Plain dense 3D convolution with zero padding.
Feature conv3(const Feature& input, const ConvWeights& layer, Stride3 stride, Pad3 pad);

/// Masked correlation scores over an x-y/depth search window. Channel index:
/// ((dz + s_z) * (2r+1) + (dy + r)) * (2r+1) + (dx + r).
struct CostVolume {
  int radius_xy = 0;
  int s_z = 0;
  Volume4 scores;    // z,h,w,(2r+1)^2*(2sz+1), normalized by channel count
  Volume4 validity;  // same shape, in {0,1}
};

CostVolume masked_correlation(const Feature& h1, const Volume& mask1, const Feature& h2,
                              const Volume& mask2, int radius_xy, int s_z);

/// Composes a previous-scale flow (already upsampled) with a residual: x-y
/// flows add; the depth distribution is the expectation of the bilinearly
/// sampled previous distribution under the residual distribution, with total
/// shifts clamped into the window, renormalized.
Flow3D compose_residual_flow(const Flow3D& prev, const Flow3D& residual);

/// Nearest-neighbor 2x upsampling of a flow field; x-y displacements double.
Flow3D upsample_flow2(const Flow3D& flow, int target_h, int target_w);

struct MatcherConfig {
  int levels = 3;
  int radius_xy = 2;
  int s_z = 1;
};

/// Deterministic coarse-to-fine block matcher over masked cost volumes of the
/// MPIs' color content; the default flow backend and the test oracle for the
/// neural one. Estimates the flow that maps ref voxels onto src.
Flow3D estimate_flow_matcher(const MultiPlaneImage& ref, const MultiPlaneImage& src,
                             const MatcherConfig& config);

/// Binary occlusion mask: forward-warp ref with the flow (same camera view),
/// take the visibility of the warped MPI, backward-warp it to the reference
/// grid and threshold at 0.5. 0 marks occluded voxels.
Volume occlusion_mask(const MultiPlaneImage& ref, const Flow3D& flow);

/// beta * MAE + (1 - beta) * (1 - SSIM) / 2, masked by occ, averaged per plane.
double photometric_loss(const MultiPlaneImage& ref, const MultiPlaneImage& recon,
                        const Volume& occ, double beta = 0.15);

/// Edge-aware first-difference smoothness of the real-valued flow, weighted by
/// (1 - grad alpha) * exp(-edge_weight_a * grad color), within planes.
double smoothness_loss(const Flow3D& flow, const MultiPlaneImage& ref,
                       double edge_weight_a = 10.0);

double total_flow_loss(double photometric, double smoothness, double lambda = 10.0);

/// Linear motion model: scales all three flow components by -k'/k.
Volume4 extrapolate_flow(const Volume4& real_flow, int k, int k_prime);

/// Selects, per pixel, the flow at the front-most occupied plane of ref.
/// Returns h,w,2 (x-y components).
Image flow_to_pixel_flow(const Volume4& real_flow, const MultiPlaneImage& ref);

}  // namespace mpiflow
