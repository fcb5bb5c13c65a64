#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mpiflow/io.hpp"
#include "mpiflow/mpi.hpp"

using namespace mpiflow;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Image random_image(std::mt19937& rng, int h, int w, int c) {
  std::uniform_real_distribution<float> d(0.f, 1.f);
  Image img(h, w, c);
  for (float& v : img.data) v = d(rng);
  return img;
}

}  // namespace

TEST_CASE("png round trip is exact up to 8-bit quantization") {
  std::mt19937 rng(10);
  const Image img = random_image(rng, 13, 17, 3);
  const std::string path = temp_path("mpiflow_io_test.png");
  write_png(path, img);
  const Image back = read_png(path);
  std::remove(path.c_str());
  REQUIRE(back.h == 13);
  REQUIRE(back.w == 17);
  REQUIRE(back.c == 3);
  for (size_t i = 0; i < img.data.size(); ++i) {
    const float expect = std::round(img.data[i] * 255.f) / 255.f;
    CHECK(std::abs(back.data[i] - expect) < 1e-6f);
  }
  // Quantized values survive a second trip bit-exactly.
  const std::string path2 = temp_path("mpiflow_io_test2.png");
  write_png(path2, back);
  const Image again = read_png(path2);
  std::remove(path2.c_str());
  CHECK(again.data == back.data);
}

TEST_CASE("grayscale images are written and read back as replicated RGB") {
  std::mt19937 rng(11);
  const Image gray = random_image(rng, 8, 8, 1);
  const std::string path = temp_path("mpiflow_io_gray.png");
  write_png(path, gray);
  const Image back = read_png(path);
  std::remove(path.c_str());
  REQUIRE(back.c == 3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const float expect = std::round(gray.at(y, x, 0) * 255.f) / 255.f;
      for (int c = 0; c < 3; ++c) CHECK(std::abs(back.at(y, x, c) - expect) < 1e-6f);
    }
}

TEST_CASE("raw depth files round-trip bit-exactly") {
  std::mt19937 rng(12);
  Image depth = random_image(rng, 9, 14, 1);
  for (float& v : depth.data) v = v * 9.f + 1.f;
  const std::string path = temp_path("mpiflow_io_test.dpt");
  write_dpt(path, depth);
  const Image back = read_depth(path);
  std::remove(path.c_str());
  REQUIRE(back.h == 9);
  REQUIRE(back.w == 14);
  CHECK(back.data == depth.data);
}

TEST_CASE("PFM depth maps load with the bottom-up row order undone") {
  // Hand-written 2x3 grayscale PFM, little-endian (negative scale).
  const std::string path = temp_path("mpiflow_io_test.pfm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "Pf\n3 2\n-1.0\n";
    // PFM stores the bottom row first.
    const float bottom[3] = {4.f, 5.f, 6.f};
    const float top[3] = {1.f, 2.f, 3.f};
    out.write(reinterpret_cast<const char*>(bottom), sizeof(bottom));
    out.write(reinterpret_cast<const char*>(top), sizeof(top));
  }
  const Image depth = read_depth(path);
  std::remove(path.c_str());
  REQUIRE(depth.h == 2);
  REQUIRE(depth.w == 3);
  CHECK(depth.at(0, 0, 0) == 1.f);
  CHECK(depth.at(0, 2, 0) == 3.f);
  CHECK(depth.at(1, 0, 0) == 4.f);
  CHECK(depth.at(1, 2, 0) == 6.f);
}

TEST_CASE("pose and intrinsics files round-trip at full precision") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<Eigen::Matrix4d> poses(3);
  for (auto& p : poses) {
    p.setIdentity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) p(i, j) = d(rng);
  }
  const std::string path = temp_path("mpiflow_io_poses.txt");
  write_poses(path, poses);
  const auto back = read_poses(path);
  std::remove(path.c_str());
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK((back[i] - poses[i]).cwiseAbs().maxCoeff() == 0.0);

  Eigen::Matrix3d k;
  k << 100.5, 0, 64.25, 0, 100.5, 48.75, 0, 0, 1;
  const std::string kp = temp_path("mpiflow_io_intrinsics.txt");
  write_intrinsics(kp, k);
  const Eigen::Matrix3d kb = read_intrinsics(kp);
  std::remove(kp.c_str());
  CHECK((kb - k).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("volume dumps round-trip bit-exactly") {
  std::mt19937 rng(14);
  std::uniform_real_distribution<float> d(-3.f, 3.f);
  Volume4 vol(3, 4, 5, 2);
  for (float& v : vol.data) v = d(rng);
  const std::string path = temp_path("mpiflow_io_test.vol");
  write_volume(path, vol);
  const Volume4 back = read_volume(path);
  std::remove(path.c_str());
  REQUIRE(back.z == 3);
  REQUIRE(back.h == 4);
  REQUIRE(back.w == 5);
  REQUIRE(back.c == 2);
  CHECK(back.data == vol.data);
}

TEST_CASE("MPI debug dumps are written and non-empty") {
  std::mt19937 rng(15);
  Image rgb = random_image(rng, 6, 8, 3);
  Image depth = random_image(rng, 6, 8, 1);
  for (float& v : depth.data) v = v * 5.f + 1.f;
  const MultiPlaneImage m = build_mpi(rgb, depth, 4);
  const std::string path = temp_path("mpiflow_io_mpi.bin");
  write_mpi_debug(path, m);
  CHECK(std::filesystem::file_size(path) > 0);
  std::remove(path.c_str());
}

TEST_CASE("flow visualization maps zero flow to white and distinct directions apart") {
  Image flow(4, 4, 2);
  const Image still = flow_visualization(flow);
  REQUIRE(still.c == 3);
  for (float v : still.data) CHECK(v == doctest::Approx(1.f).epsilon(1e-6));

  Image moving(1, 2, 2);
  moving.at(0, 0, 0) = 4.f;   // +x
  moving.at(0, 1, 0) = -4.f;  // -x
  const Image vis = flow_visualization(moving, 4.f);
  float diff = 0.f;
  for (int c = 0; c < 3; ++c) diff += std::abs(vis.at(0, 0, c) - vis.at(0, 1, c));
  CHECK(diff > 0.5f);
  for (float v : vis.data) {
    CHECK(v >= 0.f);
    CHECK(v <= 1.f);
  }
}
