#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpiflow/tensor.hpp"

namespace mpiflow {

constexpr double kPsnrCap = 99.0;

struct PsnrResult {
  double db = 0.0;
  bool exact = false;  // true when the frames are identical (MSE = 0)
};

/// Removes the evaluation margins: 40 pixels top/bottom, 60 left/right.
/// Throws std::domain_error if the frame is not larger than the margins.
Image crop_eval_region(const Image& frame);

/// Peak 1.0; identical inputs report the 99 dB cap with the exact flag set.
PsnrResult psnr(const Image& a, const Image& b);

/// SSIM with an 11x11 Gaussian window, sigma 1.5, channel-averaged.
double ssim(const Image& a, const Image& b);

/// Mean Euclidean norm of the x-y flow difference over valid pixels.
/// Empty valid mask yields NaN.
double aepe(const Image& flow_est, const Image& flow_gt, const Image& valid_mask);

struct FrameScore {
  int frame_index = 0;
  double psnr_db = 0.0;
  bool exact = false;
  double ssim = 0.0;
  std::optional<double> aepe;
};

struct EvalReport {
  std::vector<FrameScore> frames;
  double mean_psnr() const;
  double mean_ssim() const;
  std::optional<double> mean_aepe() const;

  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

}  // namespace mpiflow
