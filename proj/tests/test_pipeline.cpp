#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mpiflow/pipeline.hpp"

using namespace mpiflow;
namespace fs = std::filesystem;

namespace {

SyntheticScene moving_scene(double vx = 2.0, double vy = 0.0) {
  SyntheticScene s;
  s.width = 64;
  s.height = 48;
  s.frame_count = 6;
  s.focal = 50.0;
  s.background_depth = 10.0;
  s.background_seed = 3;
  LayerSpec l;
  l.x0 = 18;
  l.y0 = 12;
  l.width = 14;
  l.height = 14;
  l.depth = 2.0;
  l.vx = vx;
  l.vy = vy;
  l.texture_seed = 8;
  s.layers.push_back(l);
  return s;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scene configs parse keys, comments, and layer lines") {
  TempDir dir("mpiflow_test_cfg");
  const std::string cfg = (dir.path / "scene.cfg").string();
  {
    std::ofstream out(cfg);
    out << "# synthetic test scene\n"
        << "width 80\nheight 60\nframes 7\nfocal 45.5\n"
        << "background_depth 12  # meters\n"
        << "background_seed 99\n"
        << "camera_velocity 0.1 -0.2 0.05\n"
        << "camera_rotation_rate 0 0 0.01\n"
        << "layer 10 8 16 12 2.5 1.5 -0.5 0.25 7\n";
  }
  const SyntheticScene s = parse_scene_config(cfg);
  CHECK(s.width == 80);
  CHECK(s.height == 60);
  CHECK(s.frame_count == 7);
  CHECK(s.focal == doctest::Approx(45.5));
  CHECK(s.background_depth == doctest::Approx(12.0));
  CHECK(s.background_seed == 99);
  CHECK(s.camera_velocity.y() == doctest::Approx(-0.2));
  CHECK(s.camera_rotation_rate.z() == doctest::Approx(0.01));
  REQUIRE(s.layers.size() == 1);
  CHECK(s.layers[0].depth == doctest::Approx(2.5));
  CHECK(s.layers[0].vx == doctest::Approx(1.5));
  CHECK(s.layers[0].texture_seed == 7);

  // Errors carry the offending line.
  const std::string bad = (dir.path / "bad.cfg").string();
  {
    std::ofstream out(bad);
    out << "width 64\nheight 48\nframes 4\nfocal 50\nwobble 3\n";
  }
  CHECK_THROWS_WITH_AS(parse_scene_config(bad), doctest::Contains(":5:"), std::runtime_error);

  const std::string short_layer = (dir.path / "short.cfg").string();
  {
    std::ofstream out(short_layer);
    out << "width 64\nheight 48\nframes 4\nfocal 50\nlayer 1 2 3 4 5\n";
  }
  CHECK_THROWS_AS(parse_scene_config(short_layer), std::runtime_error);

  const std::string empty = (dir.path / "empty.cfg").string();
  { std::ofstream out(empty); }
  CHECK_THROWS_AS(parse_scene_config(empty), std::runtime_error);
}

TEST_CASE("synthesized datasets survive a save/load round trip") {
  const SequenceDataset ds = synthesize_dataset(moving_scene());
  TempDir dir("mpiflow_test_ds");
  save_dataset(dir.path.string(), ds);
  const SequenceDataset back = load_dataset(dir.path.string());
  REQUIRE(back.size() == ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    // PNG frames come back 8-bit quantized; depths and poses exactly.
    for (size_t j = 0; j < ds.frames[0].data.size(); ++j) {
      const float expect = std::round(ds.frames[i].data[j] * 255.f) / 255.f;
      CHECK(std::abs(back.frames[i].data[j] - expect) < 1e-6f);
    }
    CHECK(back.depths[i].data == ds.depths[i].data);
    CHECK((back.cameras[i].pose - ds.cameras[i].pose).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.cameras[i].intrinsics - ds.cameras[i].intrinsics).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("prediction requests are validated against the dataset") {
  const SequenceDataset ds = synthesize_dataset(moving_scene());
  PredictionRequest r;
  r.index = 2;
  r.factor = 2;
  CHECK_NOTHROW(r.validate(ds.size()));

  PredictionRequest bad = r;
  bad.factor = 1;
  CHECK_THROWS_AS(bad.validate(ds.size()), std::invalid_argument);
  bad = r;
  bad.index = 1;  // index - factor < 0
  CHECK_THROWS_AS(bad.validate(ds.size()), std::invalid_argument);
  bad = r;
  bad.index = 5;  // index + factor - 1 beyond the last pose
  CHECK_THROWS_AS(bad.validate(ds.size()), std::invalid_argument);
  bad = r;
  bad.num_planes = 1;
  CHECK_THROWS_AS(bad.validate(ds.size()), std::invalid_argument);
  bad = r;
  bad.infill_iterations = -1;
  CHECK_THROWS_AS(bad.validate(ds.size()), std::invalid_argument);
}

TEST_CASE("a fully static scene is predicted exactly") {
  SyntheticScene scene = moving_scene(0.0, 0.0);
  const SequenceDataset ds = synthesize_dataset(scene);
  PredictionRequest r;
  r.index = 2;
  r.factor = 2;
  const PredictionResult res = predict_frames(ds, r);
  REQUIRE(res.frames.size() == 1);
  CHECK(res.frames[0].data == ds.frames[3].data);
  for (const Image& holes : res.hole_masks)
    for (float v : holes.data) CHECK(v == 0.f);
  for (float v : res.local_flow.xy.data) CHECK(v == 0.f);
}

TEST_CASE("prediction reads only frames n and n-k") {
  const SequenceDataset clean = synthesize_dataset(moving_scene());
  PredictionRequest r;
  r.index = 2;
  r.factor = 2;
  const PredictionResult want = predict_frames(clean, r);

  SequenceDataset corrupted = clean;
  std::fill(corrupted.frames[1].data.begin(), corrupted.frames[1].data.end(), 0.42f);
  std::fill(corrupted.frames[3].data.begin(), corrupted.frames[3].data.end(), 0.42f);
  std::fill(corrupted.depths[1].data.begin(), corrupted.depths[1].data.end(), 5.f);
  std::fill(corrupted.depths[3].data.begin(), corrupted.depths[3].data.end(), 5.f);
  const PredictionResult got = predict_frames(corrupted, r);

  REQUIRE(got.frames.size() == want.frames.size());
  for (size_t i = 0; i < got.frames.size(); ++i)
    CHECK(got.frames[i].data == want.frames[i].data);
}

TEST_CASE("prediction is deterministic run to run") {
  const SequenceDataset ds = synthesize_dataset(moving_scene());
  PredictionRequest r;
  r.index = 2;
  r.factor = 2;
  const PredictionResult a = predict_frames(ds, r);
  const PredictionResult b = predict_frames(ds, r);
  REQUIRE(a.frames.size() == b.frames.size());
  for (size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i].data == b.frames[i].data);
  CHECK(a.local_flow.xy.data == b.local_flow.xy.data);
  CHECK(a.local_flow.depth_dist.data == b.local_flow.depth_dist.data);
}

TEST_CASE("multi-frame prediction emits k-1 frames and shared plane depths") {
  SyntheticScene scene = moving_scene();
  scene.frame_count = 10;
  const SequenceDataset ds = synthesize_dataset(scene);
  PredictionRequest r;
  r.index = 5;
  r.factor = 5;
  const PredictionResult res = predict_frames(ds, r);
  CHECK(res.frames.size() == 4);
  CHECK(res.hole_masks.size() == 4);
  REQUIRE(res.plane_depths.size() == 4);
  for (size_t i = 0; i + 1 < res.plane_depths.size(); ++i)
    CHECK(res.plane_depths[i] < res.plane_depths[i + 1]);
}

TEST_CASE("the built-in selftest passes") {
  const SelftestResult r = run_selftest();
  INFO(r.report);
  CHECK(r.ok);
}
