#include "mpiflow.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "mpiflow/io.hpp"
#include "mpiflow/pipeline.hpp"

namespace {

void set_err(char* err, size_t errlen, const char* msg) {
  if (!err || errlen == 0) return;
  std::snprintf(err, errlen, "%s", msg);
}

template <typename Fn>
mpiflow_status guarded(char* err, size_t errlen, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    set_err(err, errlen, e.what());
    return MPIFLOW_ERR_INVALID_ARGUMENT;
  } catch (const std::domain_error& e) {
    set_err(err, errlen, e.what());
    return MPIFLOW_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_err(err, errlen, e.what());
    return MPIFLOW_ERR_RUNTIME;
  }
}

}  // namespace

struct mpiflow_dataset {
  mpiflow::SequenceDataset ds;
};

extern "C" {

mpiflow_status mpiflow_dataset_open(const char* dir, mpiflow_dataset** out, char* err,
                                    size_t errlen) {
  if (!dir || !out) {
    set_err(err, errlen, "dataset_open: null argument");
    return MPIFLOW_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded(err, errlen, [&] {
    try {
      auto* handle = new mpiflow_dataset{mpiflow::load_dataset(dir)};
      *out = handle;
      return MPIFLOW_OK;
    } catch (const std::runtime_error& e) {
      set_err(err, errlen, e.what());
      return MPIFLOW_ERR_IO;
    }
  });
}

void mpiflow_dataset_close(mpiflow_dataset* ds) { delete ds; }

int mpiflow_dataset_frame_count(const mpiflow_dataset* ds) { return ds ? ds->ds.size() : 0; }

void mpiflow_predict_params_init(mpiflow_predict_params* params) {
  if (!params) return;
  std::memset(params, 0, sizeof(*params));
  params->index = 2;
  params->factor = 2;
  params->num_planes = 4;
  params->s_z = 1;
  params->backend = MPIFLOW_BACKEND_MATCHER;
  params->infill = MPIFLOW_INFILL_NEAREST;
  params->infill_iterations = 3;
}

mpiflow_status mpiflow_predict(mpiflow_dataset* ds, const mpiflow_predict_params* params,
                               const char* out_dir, char* err, size_t errlen) {
  if (!ds || !params || !out_dir) {
    set_err(err, errlen, "predict: null argument");
    return MPIFLOW_ERR_INVALID_ARGUMENT;
  }
  return guarded(err, errlen, [&] {
    mpiflow::PredictionRequest req;
    req.index = params->index;
    req.factor = params->factor;
    req.num_planes = params->num_planes;
    req.s_z = params->s_z;
    req.backend = params->backend == MPIFLOW_BACKEND_NETWORK ? mpiflow::FlowBackend::kNetwork
                                                             : mpiflow::FlowBackend::kMatcher;
    if (params->weights_path) req.weights_path = params->weights_path;
    req.infill = params->infill == MPIFLOW_INFILL_NETWORK ? mpiflow::InfillMethod::kNetwork
                                                          : mpiflow::InfillMethod::kNearestValid;
    req.infill_iterations = params->infill_iterations;
    if (params->infill_weights_path) req.infill_weights_path = params->infill_weights_path;
    req.dump_intermediates = params->dump_intermediates != 0;
    req.dump_dir = (std::filesystem::path(out_dir) / "intermediates").string();

    const mpiflow::PredictionResult result = mpiflow::predict_frames(ds->ds, req);
    std::filesystem::create_directories(out_dir);
    for (size_t i = 0; i < result.frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%04zu.png", i);
      mpiflow::write_png((std::filesystem::path(out_dir) / name).string(), result.frames[i]);
    }
    return MPIFLOW_OK;
  });
}

mpiflow_status mpiflow_evaluate(const char* pred_dir, const char* gt_dir, int crop_top_bottom,
                                int crop_left_right, const char* report_path, char* err,
                                size_t errlen) {
  if (!pred_dir || !gt_dir || !report_path) {
    set_err(err, errlen, "evaluate: null argument");
    return MPIFLOW_ERR_INVALID_ARGUMENT;
  }
  return guarded(err, errlen, [&] {
    const int tb = crop_top_bottom >= 0 ? crop_top_bottom : 40;
    const int lr = crop_left_right >= 0 ? crop_left_right : 60;
    const mpiflow::EvalReport report = mpiflow::evaluate_directories(pred_dir, gt_dir, tb, lr);
    report.write_csv(std::string(report_path) + ".csv");
    report.write_json(std::string(report_path) + ".json");
    return MPIFLOW_OK;
  });
}

mpiflow_status mpiflow_synth(const char* scene_config, const char* out_dir, char* err,
                             size_t errlen) {
  if (!scene_config || !out_dir) {
    set_err(err, errlen, "synth: null argument");
    return MPIFLOW_ERR_INVALID_ARGUMENT;
  }
  return guarded(err, errlen, [&] {
    const mpiflow::SyntheticScene scene = mpiflow::parse_scene_config(scene_config);
    const mpiflow::SequenceDataset ds = mpiflow::synthesize_dataset(scene);
    mpiflow::save_dataset(out_dir, ds);
    return MPIFLOW_OK;
  });
}

mpiflow_status mpiflow_selftest(char* report, size_t reportlen, char* err, size_t errlen) {
  return guarded(err, errlen, [&] {
    const mpiflow::SelftestResult res = mpiflow::run_selftest();
    if (report && reportlen > 0) std::snprintf(report, reportlen, "%s", res.report.c_str());
    if (!res.ok) {
      set_err(err, errlen, "selftest failed");
      return MPIFLOW_ERR_RUNTIME;
    }
    return MPIFLOW_OK;
  });
}

}  // extern "C"
