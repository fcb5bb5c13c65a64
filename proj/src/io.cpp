#include "mpiflow/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace mpiflow {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

Image read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string tag;
  in >> tag;
  if (tag != "Pf") throw std::runtime_error("unsupported PFM type in " + path);
  int w = 0, h = 0;
  double scale = 0.0;
  in >> w >> h >> scale;
  in.get();  // single whitespace before the raster
  if (w <= 0 || h <= 0) throw std::runtime_error("bad PFM header in " + path);
  const bool little_endian = scale < 0.0;
  std::vector<float> row(static_cast<size_t>(w));
  Image img(h, w, 1);
  // PFM rasters are stored bottom-up.
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w * sizeof(float)));
    if (!in) throw std::runtime_error("truncated PFM: " + path);
    for (int x = 0; x < w; ++x) {
      float v = row[x];
      if (!little_endian) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
      img.at(y, x, 0) = v;
    }
  }
  return img;
}

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<png_byte> row(static_cast<size_t>(w) * 3);
  Image img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[3 * x + c] / 255.f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const Image& img) {
  if (img.c != 3 && img.c != 1) throw std::invalid_argument("write_png: need 1 or 3 channels");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>(img.w) * 3);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = img.at(y, x, img.c == 1 ? 0 : c);
        row[3 * x + c] =
            static_cast<png_byte>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_depth(const std::string& path) {
  if (has_suffix(path, ".pfm") || has_suffix(path, ".PFM")) return read_pfm(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const uint32_t h = read_u32(in);
  const uint32_t w = read_u32(in);
  if (!in || h == 0 || w == 0 || h > 1u << 20 || w > 1u << 20)
    throw std::runtime_error("bad depth header in " + path);
  Image img(static_cast<int>(h), static_cast<int>(w), 1);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated depth file: " + path);
  return img;
}

void write_dpt(const std::string& path, const Image& depth) {
  if (depth.c != 1) throw std::invalid_argument("write_dpt: need 1 channel");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_u32(out, static_cast<uint32_t>(depth.h));
  write_u32(out, static_cast<uint32_t>(depth.w));
  out.write(reinterpret_cast<const char*>(depth.data.data()),
            static_cast<std::streamsize>(depth.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

std::vector<Eigen::Matrix4d> read_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Eigen::Matrix4d> poses;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty()) continue;
    if (vals.size() != 16) throw std::runtime_error("pose line needs 16 values in " + path);
    Eigen::Matrix4d m;
    for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = vals[static_cast<size_t>(i)];
    poses.push_back(m);
  }
  return poses;
}

void write_poses(const std::string& path, const std::vector<Eigen::Matrix4d>& poses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (const auto& m : poses) {
    for (int i = 0; i < 16; ++i) out << m(i / 4, i % 4) << (i == 15 ? '\n' : ' ');
  }
}

Eigen::Matrix3d read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Eigen::Matrix3d k;
  for (int i = 0; i < 9; ++i)
    if (!(in >> k(i / 3, i % 3))) throw std::runtime_error("intrinsics need 9 values in " + path);
  return k;
}

void write_intrinsics(const std::string& path, const Eigen::Matrix3d& k) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (int i = 0; i < 9; ++i) out << k(i / 3, i % 3) << (i == 8 ? '\n' : ' ');
}

void write_volume(const std::string& path, const Volume4& vol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_u32(out, static_cast<uint32_t>(vol.z));
  write_u32(out, static_cast<uint32_t>(vol.h));
  write_u32(out, static_cast<uint32_t>(vol.w));
  write_u32(out, static_cast<uint32_t>(vol.c));
  out.write(reinterpret_cast<const char*>(vol.data.data()),
            static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

Volume4 read_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const uint32_t z = read_u32(in), h = read_u32(in), w = read_u32(in), c = read_u32(in);
  if (!in) throw std::runtime_error("bad volume header in " + path);
  Volume4 vol(static_cast<int>(z), static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  in.read(reinterpret_cast<char*>(vol.data.data()),
          static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated volume file: " + path);
  return vol;
}

void write_mpi_debug(const std::string& path, const MultiPlaneImage& mpi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int Z = mpi.planes(), H = mpi.height(), W = mpi.width();
  // Header {Z, H, W}; then rgba planes, true-depth planes, plane-depth table.
  write_u32(out, static_cast<uint32_t>(Z));
  write_u32(out, static_cast<uint32_t>(H));
  write_u32(out, static_cast<uint32_t>(W));
  out.write(reinterpret_cast<const char*>(mpi.color.data.data()),
            static_cast<std::streamsize>(mpi.color.data.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(mpi.depth.data.data()),
            static_cast<std::streamsize>(mpi.depth.data.size() * sizeof(float)));
  for (double d : mpi.plane_depths) {
    const float f = static_cast<float>(d);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
  if (!out) throw std::runtime_error("short write: " + path);
}

Image flow_visualization(const Image& flow, float max_magnitude) {
  if (flow.c < 2) throw std::invalid_argument("flow_visualization: need >= 2 channels");
  float max_mag = max_magnitude;
  if (max_mag <= 0.f) {
    for (int y = 0; y < flow.h; ++y)
      for (int x = 0; x < flow.w; ++x)
        max_mag = std::max(max_mag, std::hypot(flow.at(y, x, 0), flow.at(y, x, 1)));
    if (max_mag <= 0.f) max_mag = 1.f;
  }
  Image out(flow.h, flow.w, 3);
  for (int y = 0; y < flow.h; ++y)
    for (int x = 0; x < flow.w; ++x) {
      const float fx = flow.at(y, x, 0), fy = flow.at(y, x, 1);
      const float mag = std::min(std::hypot(fx, fy) / max_mag, 1.f);
      const float angle = std::atan2(-fy, -fx) / static_cast<float>(M_PI);  // [-1, 1]
      const float hue = (angle + 1.f) / 2.f * 6.f;                          // [0, 6)
      const int sector = std::min(static_cast<int>(hue), 5);
      const float frac = hue - sector;
      float rgb[3] = {0, 0, 0};
      switch (sector) {
        case 0: rgb[0] = 1.f; rgb[1] = frac; break;
        case 1: rgb[0] = 1.f - frac; rgb[1] = 1.f; break;
        case 2: rgb[1] = 1.f; rgb[2] = frac; break;
        case 3: rgb[1] = 1.f - frac; rgb[2] = 1.f; break;
        case 4: rgb[2] = 1.f; rgb[0] = frac; break;
        default: rgb[2] = 1.f - frac; rgb[0] = 1.f; break;
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = 1.f - mag * (1.f - rgb[c]);
    }
  return out;
}

}  // namespace mpiflow
