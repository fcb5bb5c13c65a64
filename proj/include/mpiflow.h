/* C interface to the mpiflow frame-prediction library. All functions return
 * MPIFLOW_OK on success; on failure a short message is written to the caller's
 * error buffer (always NUL-terminated, truncated to errlen). */
#ifndef MPIFLOW_H_
#define MPIFLOW_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mpiflow_status {
  MPIFLOW_OK = 0,
  MPIFLOW_ERR_INVALID_ARGUMENT = 1,
  MPIFLOW_ERR_IO = 2,
  MPIFLOW_ERR_RUNTIME = 3,
} mpiflow_status;

typedef struct mpiflow_dataset mpiflow_dataset;

/* Opens a sequence directory (NNNN.png, NNNN.dpt, poses.txt, intrinsics.txt). */
mpiflow_status mpiflow_dataset_open(const char* dir, mpiflow_dataset** out, char* err,
                                    size_t errlen);
void mpiflow_dataset_close(mpiflow_dataset* ds);
int mpiflow_dataset_frame_count(const mpiflow_dataset* ds);

typedef enum mpiflow_backend {
  MPIFLOW_BACKEND_MATCHER = 0,
  MPIFLOW_BACKEND_NETWORK = 1,
} mpiflow_backend;

typedef enum mpiflow_infill {
  MPIFLOW_INFILL_NEAREST = 0,
  MPIFLOW_INFILL_NETWORK = 1,
} mpiflow_infill;

typedef struct mpiflow_predict_params {
  int index;             /* n: frame to predict from */
  int factor;            /* k >= 2; predicts k-1 frames */
  int num_planes;        /* Z, default 4 */
  int s_z;               /* depth search range, default 1 */
  int backend;           /* mpiflow_backend */
  const char* weights_path;        /* flow network weights, may be NULL */
  int infill;            /* mpiflow_infill */
  int infill_iterations; /* g, default 3 */
  const char* infill_weights_path; /* infill network weights, may be NULL */
  int dump_intermediates;          /* nonzero writes stage composites */
} mpiflow_predict_params;

/* Fills params with the library defaults (Z=4, s_z=1, g=3, matcher backend). */
void mpiflow_predict_params_init(mpiflow_predict_params* params);

/* Predicts frames n+1 .. n+factor-1 and writes them as 0000.png .. into
 * out_dir (created if missing). */
mpiflow_status mpiflow_predict(mpiflow_dataset* ds, const mpiflow_predict_params* params,
                               const char* out_dir, char* err, size_t errlen);

/* Compares NNNN.png files of two directories inside the evaluation crop and
 * writes CSV + JSON reports to report_path(.csv/.json). Pass crop margins < 0
 * for the defaults (40 top/bottom, 60 left/right). */
mpiflow_status mpiflow_evaluate(const char* pred_dir, const char* gt_dir,
                                int crop_top_bottom, int crop_left_right,
                                const char* report_path, char* err, size_t errlen);

/* Renders a synthetic scene config into a dataset directory. */
mpiflow_status mpiflow_synth(const char* scene_config, const char* out_dir, char* err,
                             size_t errlen);

/* Runs the built-in oracle checks; writes the report into `report` (truncated
 * to reportlen). Returns MPIFLOW_OK only if every check passed. */
mpiflow_status mpiflow_selftest(char* report, size_t reportlen, char* err, size_t errlen);

#ifdef __cplusplus
}
#endif

#endif /* MPIFLOW_H_ */
