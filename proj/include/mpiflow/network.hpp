#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpiflow/flow.hpp"
#include "mpiflow/mpi.hpp"

namespace mpiflow {

/// Named-tensor container backing the binary weight-file format
/// (versioned header + per-tensor name, dims, row-major float32 data).
struct WeightTensor {
  std::vector<uint32_t> dims;
  std::vector<float> data;
};

struct WeightFile {
  std::map<std::string, WeightTensor> tensors;

  void save(const std::string& path) const;
  static WeightFile load(const std::string& path);
};

struct ConvLayerSpec {
  ConvWeights weights;
  Stride3 stride;
  Pad3 pad;
};

/// Weights for the coarse-to-fine flow estimator: a 12-layer partial-conv
/// feature pyramid, per-level 1x1x1 channel reducers, and a 6-layer shared
/// decoder emitting 2 linear x-y channels plus a softmaxed depth distribution.
struct FlowNetworkWeights {
  int s_z = 1;
  int radius_xy = 2;
  std::vector<ConvLayerSpec> feature_layers;  // 12
  std::vector<ConvLayerSpec> reducers;        // one per decoded level (coarse to fine)
  std::vector<ConvLayerSpec> decoder;         // 6

  static FlowNetworkWeights zeros(int s_z = 1, int radius_xy = 2);
  static FlowNetworkWeights random_init(uint64_t seed, int s_z = 1, int radius_xy = 2);

  WeightFile to_file() const;
  static FlowNetworkWeights from_file(const WeightFile& f);

  /// Throws std::invalid_argument when layer shapes do not chain.
  void validate() const;
};

/// Neural flow backend: partial-conv feature pyramid, per-level masked
/// correlation and residual decoding, composition across scales; the final
/// flow is estimated at quarter resolution and upsampled by four.
Flow3D estimate_flow_network(const MultiPlaneImage& ref, const MultiPlaneImage& src,
                             const FlowNetworkWeights& weights);

/// Weights for the 9-layer encoder-decoder that predicts 2D infilling vectors.
struct InfillNetworkWeights {
  std::vector<ConvLayerSpec> layers;  // 9

  static InfillNetworkWeights zeros();
  static InfillNetworkWeights random_init(uint64_t seed);

  WeightFile to_file() const;
  static InfillNetworkWeights from_file(const WeightFile& f);
  void validate() const;
};

/// Forward pass producing per-voxel 2D infilling vectors (z,h,w,2).
Volume4 infill_network_forward(const MultiPlaneImage& mpi, const InfillNetworkWeights& weights);

}  // namespace mpiflow
