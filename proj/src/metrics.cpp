#include "mpiflow/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace mpiflow {

namespace {

constexpr int kSsimRadius = 5;  // 11x11 window
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

double ssim_channel(const Image& a, const Image& b, int ch) {
  static const std::vector<double> kernel = [] {
    std::vector<double> k(2 * kSsimRadius + 1);
    for (int i = -kSsimRadius; i <= kSsimRadius; ++i)
      k[i + kSsimRadius] = std::exp(-(i * i) / (2.0 * kSsimSigma * kSsimSigma));
    return k;
  }();

  double total = 0.0;
  for (int y = 0; y < a.h; ++y) {
    for (int x = 0; x < a.w; ++x) {
      double wsum = 0, mu1 = 0, mu2 = 0, s11 = 0, s22 = 0, s12 = 0;
      for (int dy = -kSsimRadius; dy <= kSsimRadius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= a.h) continue;
        for (int dx = -kSsimRadius; dx <= kSsimRadius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= a.w) continue;
          const double w = kernel[dy + kSsimRadius] * kernel[dx + kSsimRadius];
          const double va = a.at(yy, xx, ch);
          const double vb = b.at(yy, xx, ch);
          wsum += w;
          mu1 += w * va;
          mu2 += w * vb;
          s11 += w * va * va;
          s22 += w * vb * vb;
          s12 += w * va * vb;
        }
      }
      mu1 /= wsum;
      mu2 /= wsum;
      const double var1 = s11 / wsum - mu1 * mu1;
      const double var2 = s22 / wsum - mu2 * mu2;
      const double cov = s12 / wsum - mu1 * mu2;
      total += ((2 * mu1 * mu2 + kSsimC1) * (2 * cov + kSsimC2)) /
               ((mu1 * mu1 + mu2 * mu2 + kSsimC1) * (var1 + var2 + kSsimC2));
    }
  }
  return total / (static_cast<double>(a.h) * a.w);
}

}  // namespace

Image crop_eval_region(const Image& frame) {
  constexpr int kTopBottom = 40;
  constexpr int kLeftRight = 60;
  if (frame.h <= 2 * kTopBottom || frame.w <= 2 * kLeftRight)
    throw std::domain_error("crop_eval_region: frame smaller than evaluation margins");
  Image out(frame.h - 2 * kTopBottom, frame.w - 2 * kLeftRight, frame.c);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      for (int ch = 0; ch < out.c; ++ch)
        out.at(y, x, ch) = frame.at(y + kTopBottom, x + kLeftRight, ch);
  return out;
}

PsnrResult psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  PsnrResult r;
  if (mse == 0.0) {
    r.db = kPsnrCap;
    r.exact = true;
  } else {
    r.db = std::min(kPsnrCap, -10.0 * std::log10(mse));
  }
  return r;
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  double total = 0.0;
  for (int ch = 0; ch < a.c; ++ch) total += ssim_channel(a, b, ch);
  return total / a.c;
}

double aepe(const Image& flow_est, const Image& flow_gt, const Image& valid_mask) {
  if (!flow_est.same_shape(flow_gt) || flow_est.c != 2)
    throw std::invalid_argument("aepe: flow shape mismatch");
  if (valid_mask.h != flow_est.h || valid_mask.w != flow_est.w || valid_mask.c != 1)
    throw std::invalid_argument("aepe: mask shape mismatch");
  double total = 0.0;
  long count = 0;
  for (int y = 0; y < flow_est.h; ++y) {
    for (int x = 0; x < flow_est.w; ++x) {
      if (valid_mask.at(y, x, 0) <= 0.f) continue;
      const double dx = static_cast<double>(flow_est.at(y, x, 0)) - flow_gt.at(y, x, 0);
      const double dy = static_cast<double>(flow_est.at(y, x, 1)) - flow_gt.at(y, x, 1);
      total += std::sqrt(dx * dx + dy * dy);
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return total / count;
}

double EvalReport::mean_psnr() const {
  double t = 0;
  for (const auto& f : frames) t += f.psnr_db;
  return frames.empty() ? 0.0 : t / frames.size();
}

double EvalReport::mean_ssim() const {
  double t = 0;
  for (const auto& f : frames) t += f.ssim;
  return frames.empty() ? 0.0 : t / frames.size();
}

std::optional<double> EvalReport::mean_aepe() const {
  double t = 0;
  int n = 0;
  for (const auto& f : frames)
    if (f.aepe) {
      t += *f.aepe;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return t / n;
}

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "frame_index,psnr,ssim,aepe\n";
  for (const auto& f : frames) {
    out << f.frame_index << ',' << f.psnr_db << ',' << f.ssim << ',';
    if (f.aepe) out << *f.aepe;
    out << '\n';
  }
}

void EvalReport::write_json(const std::string& path) const {
  nlohmann::json j;
  j["frame_count"] = frames.size();
  j["mean_psnr"] = mean_psnr();
  j["mean_ssim"] = mean_ssim();
  if (auto a = mean_aepe()) j["mean_aepe"] = *a;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mpiflow
