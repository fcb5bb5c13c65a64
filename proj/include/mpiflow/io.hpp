#pragma once

#include <string>
#include <vector>

#include "mpiflow/camera.hpp"
#include "mpiflow/mpi.hpp"
#include "mpiflow/tensor.hpp"

namespace mpiflow {

/// 8-bit RGB PNG. Float channels are clamped to [0,1] and quantized on write;
/// grayscale and RGBA files are converted to RGB on read.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

/// Raw depth: {uint32 H, uint32 W} header then row-major float32,
/// little-endian. read_depth also accepts PFM (Pf, grayscale).
Image read_depth(const std::string& path);
void write_dpt(const std::string& path, const Image& depth);

/// poses.txt: one camera per line, 16 whitespace-separated doubles (4x4
/// row-major, world-to-camera). intrinsics.txt: 9 doubles, 3x3 row-major.
std::vector<Eigen::Matrix4d> read_poses(const std::string& path);
void write_poses(const std::string& path, const std::vector<Eigen::Matrix4d>& poses);
Eigen::Matrix3d read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const Eigen::Matrix3d& k);

/// Raw volume dump: {uint32 Z, H, W, C} header then row-major float32.
void write_volume(const std::string& path, const Volume4& vol);
Volume4 read_volume(const std::string& path);

/// Debug dump of all MPI planes: color+alpha volume, depth volume, and the
/// plane-depth table, concatenated as volume dumps in one file.
void write_mpi_debug(const std::string& path, const MultiPlaneImage& mpi);

/// Color-wheel rendering of the x-y components of a flow field (h,w,>=2).
/// Hue encodes direction, saturation encodes magnitude relative to the field
/// maximum (or max_magnitude when positive).
Image flow_visualization(const Image& flow, float max_magnitude = 0.f);

}  // namespace mpiflow
