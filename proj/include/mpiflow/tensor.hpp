#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace mpiflow {

/// H x W x C image plane, row-major, C fastest.
struct Image {
  int h = 0, w = 0, c = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h_, int w_, int c_, float fill = 0.f)
      : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {}

  float& at(int y, int x, int ch) {
    assert(y >= 0 && y < h && x >= 0 && x < w && ch >= 0 && ch < c);
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    assert(y >= 0 && y < h && x >= 0 && x < w && ch >= 0 && ch < c);
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

/// Z x H x W scalar volume (alpha, depth, masks).
struct Volume {
  int z = 0, h = 0, w = 0;
  std::vector<float> data;

  Volume() = default;
  Volume(int z_, int h_, int w_, float fill = 0.f)
      : z(z_), h(h_), w(w_), data(static_cast<size_t>(z_) * h_ * w_, fill) {}

  float& at(int zi, int y, int x) {
    assert(zi >= 0 && zi < z && y >= 0 && y < h && x >= 0 && x < w);
    return data[(static_cast<size_t>(zi) * h + y) * w + x];
  }
  float at(int zi, int y, int x) const {
    assert(zi >= 0 && zi < z && y >= 0 && y < h && x >= 0 && x < w);
    return data[(static_cast<size_t>(zi) * h + y) * w + x];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Volume& o) const { return z == o.z && h == o.h && w == o.w; }
};

/// Z x H x W x C volume, C fastest (per-voxel vectors: color, flow, distributions).
struct Volume4 {
  int z = 0, h = 0, w = 0, c = 0;
  std::vector<float> data;

  Volume4() = default;
  Volume4(int z_, int h_, int w_, int c_, float fill = 0.f)
      : z(z_), h(h_), w(w_), c(c_),
        data(static_cast<size_t>(z_) * h_ * w_ * c_, fill) {}

  float& at(int zi, int y, int x, int ch) {
    assert(zi >= 0 && zi < z && y >= 0 && y < h && x >= 0 && x < w && ch >= 0 && ch < c);
    return data[((static_cast<size_t>(zi) * h + y) * w + x) * c + ch];
  }
  float at(int zi, int y, int x, int ch) const {
    assert(zi >= 0 && zi < z && y >= 0 && y < h && x >= 0 && x < w && ch >= 0 && ch < c);
    return data[((static_cast<size_t>(zi) * h + y) * w + x) * c + ch];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Volume4& o) const {
    return z == o.z && h == o.h && w == o.w && c == o.c;
  }
};

/// C x Z x H x W feature volume, channel-major for convolution loops.
struct Feature {
  int c = 0, z = 0, h = 0, w = 0;
  std::vector<float> data;

  Feature() = default;
  Feature(int c_, int z_, int h_, int w_, float fill = 0.f)
      : c(c_), z(z_), h(h_), w(w_),
        data(static_cast<size_t>(c_) * z_ * h_ * w_, fill) {}

  float& at(int ch, int zi, int y, int x) {
    assert(ch >= 0 && ch < c && zi >= 0 && zi < z && y >= 0 && y < h && x >= 0 && x < w);
    return data[((static_cast<size_t>(ch) * z + zi) * h + y) * w + x];
  }
  float at(int ch, int zi, int y, int x) const {
    assert(ch >= 0 && ch < c && zi >= 0 && zi < z && y >= 0 && y < h && x >= 0 && x < w);
    return data[((static_cast<size_t>(ch) * z + zi) * h + y) * w + x];
  }
  size_t size() const { return data.size(); }
};

}  // namespace mpiflow
