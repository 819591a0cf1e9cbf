/*
 * poolkp C API.
 *
 * Every function returns a poolkp_status. On failure a one-line description
 * is available from poolkp_last_error() until the next call on the same
 * thread. Objects are opaque handles created by *_create / *_load / *_read
 * functions and released with the matching *_free (NULL is accepted).
 */
#ifndef POOLKP_H
#define POOLKP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define POOLKP_API __declspec(dllexport)
#else
#  define POOLKP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum poolkp_status {
  POOLKP_OK = 0,
  POOLKP_ERR_INVALID_ARGUMENT = 1, /* NULL pointer or bad parameter */
  POOLKP_ERR_CONFIG = 2,
  POOLKP_ERR_OUT_OF_BOUNDS = 3,
  POOLKP_ERR_NUMERIC = 4,
  POOLKP_ERR_SHAPE = 5,
  POOLKP_ERR_DOMAIN = 6,
  POOLKP_ERR_FORMAT = 7,
  POOLKP_ERR_VALIDATION = 8,
  POOLKP_ERR_PARSE = 9,
  POOLKP_ERR_IO = 10,
  POOLKP_ERR_RANK = 11,
  POOLKP_ERR_DEGENERATE = 12,
  POOLKP_ERR_NO_MODEL = 13,
  POOLKP_ERR_INSUFFICIENT = 14,
  POOLKP_ERR_PROJECTIVE = 15,
  POOLKP_ERR_SAMPLING = 16,
  POOLKP_ERR_INTERNAL = 99
} poolkp_status;

/* Machine-readable category name, e.g. "validation". */
POOLKP_API const char* poolkp_status_name(poolkp_status status);
POOLKP_API const char* poolkp_last_error(void);

/* ---- key-points ------------------------------------------------------- */

enum { POOLKP_CHANNELS = 96 };

typedef enum poolkp_class {
  POOLKP_WALL_LEFT = 0,
  POOLKP_WALL_RIGHT,
  POOLKP_FLOATING_LEFT,
  POOLKP_FLOATING_RIGHT,
  POOLKP_BULKHEAD_LEFT,
  POOLKP_BULKHEAD_RIGHT,
  POOLKP_WALL_TOP,
  POOLKP_WALL_BOTTOM
} poolkp_class;

POOLKP_API poolkp_status poolkp_channel_index(poolkp_class cls, int index, int* out_channel);
POOLKP_API poolkp_status poolkp_channel_keypoint(int channel, poolkp_class* out_cls, int* out_index);

/* ---- pool model ------------------------------------------------------- */

typedef struct poolkp_pool_config {
  int lanes;
  int length_m;
  int bumpers;  /* bool */
  int bulkhead; /* bool */
  double lane_width_m;
  double bumper_width_m;
  double bulkhead_width_m;
  double bulkhead_x_m; /* <= 0: middle of the outline */
} poolkp_pool_config;

typedef struct poolkp_model_entry {
  poolkp_class cls;
  int index;
  int exists;
  int horizontal_line; /* 1: only y_m is meaningful */
  double x_m;
  double y_m;
} poolkp_model_entry;

typedef struct poolkp_model poolkp_model;

POOLKP_API void poolkp_pool_config_default(poolkp_pool_config* config);
POOLKP_API poolkp_status poolkp_model_create(const poolkp_pool_config* config, poolkp_model** out);
POOLKP_API poolkp_status poolkp_model_load(const char* path, poolkp_model** out);
POOLKP_API poolkp_status poolkp_model_save(const poolkp_model* model, const char* path);
POOLKP_API poolkp_status poolkp_model_entry_get(const poolkp_model* model, int channel, poolkp_model_entry* out);
POOLKP_API void poolkp_model_free(poolkp_model* model);

/* ---- heatmap volumes -------------------------------------------------- */

typedef struct poolkp_volume poolkp_volume;

/* Reads a PKHV file. *out_channel_mismatch (optional) is set when C != 96. */
POOLKP_API poolkp_status poolkp_volume_read(const char* path, poolkp_volume** out, int* out_channel_mismatch);
POOLKP_API poolkp_status poolkp_volume_write(const poolkp_volume* volume, const char* path);
/* Softmax over channels*rows*cols logits in channel-major order. */
POOLKP_API poolkp_status poolkp_volume_from_logits(int rows, int cols, int channels, const double* logits, poolkp_volume** out);
POOLKP_API poolkp_status poolkp_volume_dims(const poolkp_volume* volume, int* rows, int* cols, int* channels);
/* Borrowed pointer to rows*cols values, valid while the volume lives. */
POOLKP_API poolkp_status poolkp_volume_channel(const poolkp_volume* volume, int channel, const double** out);
POOLKP_API poolkp_status poolkp_volume_validate(const poolkp_volume* volume);
POOLKP_API void poolkp_volume_free(poolkp_volume* volume);

POOLKP_API poolkp_status poolkp_channel_entropy(const double* values, size_t count, double* out_nats);
POOLKP_API poolkp_status poolkp_cross_entropy(const poolkp_volume* target, const poolkp_volume* pred, double* out_nats);

/* ---- annotations and detections ---------------------------------------- */

typedef struct poolkp_annotation poolkp_annotation;
typedef struct poolkp_detections poolkp_detections;

typedef struct poolkp_detection {
  poolkp_class cls;
  int index;
  double u;
  double v;
  double entropy;
} poolkp_detection;

POOLKP_API poolkp_status poolkp_annotation_load(const char* path, poolkp_annotation** out);
POOLKP_API poolkp_status poolkp_annotation_save(const poolkp_annotation* ann, const char* path);
POOLKP_API poolkp_status poolkp_annotation_dims(const poolkp_annotation* ann, int* rows, int* cols, size_t* points);
POOLKP_API void poolkp_annotation_free(poolkp_annotation* ann);
/* Delta/flat target volume at rows x cols. */
POOLKP_API poolkp_status poolkp_target_volume(const poolkp_annotation* ann, int rows, int cols, poolkp_volume** out);

POOLKP_API poolkp_status poolkp_decode(const poolkp_volume* volume, double beta, const char* frame_id, poolkp_detections** out);
POOLKP_API poolkp_status poolkp_detections_load(const char* path, poolkp_detections** out);
POOLKP_API poolkp_status poolkp_detections_save(const poolkp_detections* det, const char* path);
/* Borrowed string, valid while det lives. */
POOLKP_API poolkp_status poolkp_detections_frame_id(const poolkp_detections* det, const char** out);
POOLKP_API poolkp_status poolkp_detections_count(const poolkp_detections* det, size_t* out);
POOLKP_API poolkp_status poolkp_detections_get(const poolkp_detections* det, size_t i, poolkp_detection* out);
POOLKP_API void poolkp_detections_free(poolkp_detections* det);

/* Reads a CVAT XML export, rescales by 1/scale_factor and writes one
 * annotation JSON per image into out_dir. */
POOLKP_API poolkp_status poolkp_import_cvat(const char* xml_path, double scale_factor, const char* out_dir, size_t* out_frames);

/* ---- evaluation --------------------------------------------------------- */

typedef struct poolkp_report poolkp_report;

typedef struct poolkp_scores {
  double precision;
  double recall;
  double f1;
  long total;
  int present; /* 0 when the scope had no ground truth and no false positives */
} poolkp_scores;

/*
 * Pairs <id>.pkhv (decoded at beta) or <id>.json detection files in pred_dir
 * with <id>.json annotations in gt_dir.
 */
POOLKP_API poolkp_status poolkp_evaluate_dirs(const char* pred_dir, const char* gt_dir, double tolerance_px, double beta,
                                              poolkp_report** out);
POOLKP_API poolkp_status poolkp_report_mean_f1(const poolkp_report* report, double* out);
POOLKP_API poolkp_status poolkp_report_frame_count(const poolkp_report* report, size_t* out);
POOLKP_API poolkp_status poolkp_report_class(const poolkp_report* report, poolkp_class cls, poolkp_scores* out);
POOLKP_API poolkp_status poolkp_report_keypoint(const poolkp_report* report, int channel, poolkp_scores* out);
POOLKP_API poolkp_status poolkp_report_save_json(const poolkp_report* report, const char* path);
POOLKP_API poolkp_status poolkp_report_save_class_csv(const poolkp_report* report, const char* path);
POOLKP_API poolkp_status poolkp_report_save_keypoint_csv(const poolkp_report* report, const char* path);
POOLKP_API void poolkp_report_free(poolkp_report* report);

POOLKP_API double poolkp_f1_from_pr(double precision, double recall);
/* Reference beta for 6/8/10 (or 12/16/20) lane pools. */
POOLKP_API poolkp_status poolkp_optimal_beta(int lanes, double* out);

typedef struct poolkp_curve poolkp_curve;

/* Expands "a:b:step"; *count receives the number of values. Pass values=NULL to query. */
POOLKP_API poolkp_status poolkp_parse_grid(const char* spec, double* values, size_t capacity, size_t* count);
/* Volumes must be .pkhv files in pred_dir. */
POOLKP_API poolkp_status poolkp_sweep_beta_dirs(const char* pred_dir, const char* gt_dir, double tolerance_px, const double* betas,
                                                size_t n, poolkp_curve** out);
POOLKP_API poolkp_status poolkp_sweep_tolerance_dirs(const char* pred_dir, const char* gt_dir, double beta, const double* tolerances,
                                                     size_t n, poolkp_curve** out);
POOLKP_API poolkp_status poolkp_curve_size(const poolkp_curve* curve, size_t* out);
POOLKP_API poolkp_status poolkp_curve_point(const poolkp_curve* curve, size_t i, double* x, double* mean_f1, long* detections);
POOLKP_API poolkp_status poolkp_curve_save_csv(const poolkp_curve* curve, const char* path);
POOLKP_API void poolkp_curve_free(poolkp_curve* curve);

/* ---- localization ------------------------------------------------------- */

typedef struct poolkp_ransac_params {
  int iterations;
  double inlier_threshold_px;
  uint64_t seed;
} poolkp_ransac_params;

typedef struct poolkp_localization {
  double h[9]; /* frame px -> base px, row-major, unit Frobenius norm */
  int inliers;
  double mean_residual_px;
  int point_constraints;
  int line_constraints;
} poolkp_localization;

POOLKP_API void poolkp_ransac_params_default(poolkp_ransac_params* params);
POOLKP_API poolkp_status poolkp_localize(const poolkp_detections* det, const poolkp_model* model, double scale_px_per_m,
                                         const poolkp_ransac_params* params, poolkp_localization* out);
POOLKP_API poolkp_status poolkp_localization_save(const poolkp_localization* loc, const char* frame_id, const char* path);

/* ---- synthetic data ----------------------------------------------------- */

typedef struct poolkp_synth_params {
  int frame_rows;
  int frame_cols;
  int partial_view; /* bool */
  double loc_sigma_px;
  double dropout_rate;
  double false_positive_rate;
  double peak_mass;
  double scale_px_per_m;
  uint64_t seed;
} poolkp_synth_params;

POOLKP_API void poolkp_synth_params_default(poolkp_synth_params* params);
/* Writes annotations/, volumes/, homographies/ and manifest.json under out_dir. */
POOLKP_API poolkp_status poolkp_synth_generate(const poolkp_model* model, const poolkp_synth_params* params, int count,
                                               const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* POOLKP_H */
