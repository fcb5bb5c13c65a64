// Command-line front end for the mpiflow library (links the C API only).
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpiflow.h"

namespace {

int fail(const char* stage, const char* msg) {
  std::fprintf(stderr, "mpiflow %s: %s\n", stage, msg);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Future-frame prediction over multi-plane images"};
  app.require_subcommand(1);
  char err[512] = {0};

  // predict
  auto* predict = app.add_subcommand("predict", "Predict the next k-1 frames of a sequence");
  std::string input_dir, out_dir, weights, infill_weights;
  int index = 2, factor = 2, planes = 4, sz = 1, iterations = 3;
  std::string backend = "matcher", infill = "nearest";
  bool dump = false;
  predict->add_option("--input-dir", input_dir, "Sequence directory")->required();
  predict->add_option("--index", index, "Current frame index n (needs n >= factor)");
  predict->add_option("--factor", factor, "Frame-rate upsampling factor k");
  predict->add_option("--planes", planes, "MPI plane count Z");
  predict->add_option("--sz", sz, "Depth-plane search range s_z");
  predict->add_option("--backend", backend, "Flow backend")
      ->check(CLI::IsMember({"matcher", "network"}));
  predict->add_option("--weights", weights, "Flow network weight file");
  predict->add_option("--infill", infill, "Infill method")
      ->check(CLI::IsMember({"nearest", "network"}));
  predict->add_option("--infill-weights", infill_weights, "Infill network weight file");
  predict->add_option("--iterations", iterations, "Infill iterations g");
  predict->add_option("--out-dir", out_dir, "Output directory")->required();
  predict->add_flag("--dump-intermediates", dump, "Write per-stage composites");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted frames against references");
  std::string pred_dir, gt_dir, report = "report";
  int crop_tb = 40, crop_lr = 60;
  evaluate->add_option("--pred-dir", pred_dir, "Predicted frames")->required();
  evaluate->add_option("--gt-dir", gt_dir, "Reference frames")->required();
  evaluate->add_option("--crop-top-bottom", crop_tb, "Vertical crop margin");
  evaluate->add_option("--crop-left-right", crop_lr, "Horizontal crop margin");
  evaluate->add_option("--report", report, "Report path prefix (.csv/.json appended)");

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic RGB-D sequence");
  std::string scene_config, synth_out;
  synth->add_option("--scene-config", scene_config, "Scene description file")->required();
  synth->add_option("--out-dir", synth_out, "Output dataset directory")->required();

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  if (predict->parsed()) {
    mpiflow_dataset* ds = nullptr;
    if (mpiflow_dataset_open(input_dir.c_str(), &ds, err, sizeof(err)) != MPIFLOW_OK)
      return fail("predict", err);
    mpiflow_predict_params params;
    mpiflow_predict_params_init(&params);
    params.index = index;
    params.factor = factor;
    params.num_planes = planes;
    params.s_z = sz;
    params.backend = backend == "network" ? MPIFLOW_BACKEND_NETWORK : MPIFLOW_BACKEND_MATCHER;
    params.weights_path = weights.empty() ? nullptr : weights.c_str();
    params.infill = infill == "network" ? MPIFLOW_INFILL_NETWORK : MPIFLOW_INFILL_NEAREST;
    params.infill_iterations = iterations;
    params.infill_weights_path = infill_weights.empty() ? nullptr : infill_weights.c_str();
    params.dump_intermediates = dump ? 1 : 0;
    const mpiflow_status st = mpiflow_predict(ds, &params, out_dir.c_str(), err, sizeof(err));
    mpiflow_dataset_close(ds);
    if (st != MPIFLOW_OK) return fail("predict", err);
    std::printf("wrote %d predicted frame(s) to %s\n", factor - 1, out_dir.c_str());
    return 0;
  }

  if (evaluate->parsed()) {
    if (mpiflow_evaluate(pred_dir.c_str(), gt_dir.c_str(), crop_tb, crop_lr, report.c_str(), err,
                         sizeof(err)) != MPIFLOW_OK)
      return fail("evaluate", err);
    std::printf("wrote %s.csv and %s.json\n", report.c_str(), report.c_str());
    return 0;
  }

  if (synth->parsed()) {
    if (mpiflow_synth(scene_config.c_str(), synth_out.c_str(), err, sizeof(err)) != MPIFLOW_OK)
      return fail("synth", err);
    std::printf("rendered scene to %s\n", synth_out.c_str());
    return 0;
  }

  if (selftest->parsed()) {
    char report_buf[4096] = {0};
    const mpiflow_status st = mpiflow_selftest(report_buf, sizeof(report_buf), err, sizeof(err));
    std::fputs(report_buf, stdout);
    if (st != MPIFLOW_OK) return fail("selftest", err);
    return 0;
  }
  return 1;
}
