#include "poolkp/poolkp.h"

#include <cmath>
#include <exception>
#include <new>
#include <string>

#include "io_util.hpp"
#include "poolkp/annotation_io.hpp"
#include "poolkp/error.hpp"
#include "poolkp/heatmap.hpp"
#include "poolkp/homography.hpp"
#include "poolkp/metrics.hpp"
#include "poolkp/pipeline.hpp"
#include "poolkp/pool_model.hpp"
#include "poolkp/synthetic.hpp"

struct poolkp_model {
  poolkp::BasePoolModel model;
};
struct poolkp_volume {
  poolkp::HeatmapVolume volume;
};
struct poolkp_annotation {
  poolkp::FrameAnnotation annotation;
};
struct poolkp_detections {
  poolkp::DetectionSet detections;
};
struct poolkp_report {
  poolkp::EvalReport report;
};
struct poolkp_curve {
  std::vector<poolkp::CurvePoint> points;
};

namespace {

thread_local std::string g_last_error;

poolkp_status status_of(poolkp::ErrorKind kind) {
  using poolkp::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return POOLKP_ERR_CONFIG;
    case ErrorKind::OutOfBounds: return POOLKP_ERR_OUT_OF_BOUNDS;
    case ErrorKind::Numeric: return POOLKP_ERR_NUMERIC;
    case ErrorKind::Shape: return POOLKP_ERR_SHAPE;
    case ErrorKind::Domain: return POOLKP_ERR_DOMAIN;
    case ErrorKind::Format: return POOLKP_ERR_FORMAT;
    case ErrorKind::Validation: return POOLKP_ERR_VALIDATION;
    case ErrorKind::Parse: return POOLKP_ERR_PARSE;
    case ErrorKind::Io: return POOLKP_ERR_IO;
    case ErrorKind::Rank: return POOLKP_ERR_RANK;
    case ErrorKind::Degenerate: return POOLKP_ERR_DEGENERATE;
    case ErrorKind::NoModel: return POOLKP_ERR_NO_MODEL;
    case ErrorKind::Insufficient: return POOLKP_ERR_INSUFFICIENT;
    case ErrorKind::Projective: return POOLKP_ERR_PROJECTIVE;
    case ErrorKind::Sampling: return POOLKP_ERR_SAMPLING;
    case ErrorKind::Input: return POOLKP_ERR_INVALID_ARGUMENT;
  }
  return POOLKP_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes and the thread's last error.
template <class Fn>
poolkp_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return POOLKP_OK;
  } catch (const poolkp::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return POOLKP_ERR_INTERNAL;
}

template <class... Ptrs>
void require(const Ptrs*... ptrs) {
  if (((ptrs == nullptr) || ...)) throw poolkp::Error(poolkp::ErrorKind::Input, "null argument");
}

poolkp::KeyPointId to_id(poolkp_class cls, int index) {
  const poolkp::KeyPointId id{static_cast<poolkp::KeyPointClass>(cls), index};
  if (static_cast<int>(cls) < 0 || static_cast<int>(cls) > 7 || !poolkp::is_valid(id))
    throw poolkp::Error(poolkp::ErrorKind::Input, "invalid key-point (class " + std::to_string(int(cls)) + ", index " + std::to_string(index) + ")");
  return id;
}

poolkp_scores to_c(const poolkp::ScopeScore& s) {
  poolkp_scores out{};
  out.total = s.total;
  out.present = s.scores ? 1 : 0;
  if (s.scores) {
    out.precision = s.scores->precision;
    out.recall = s.scores->recall;
    out.f1 = s.scores->f1;
  }
  return out;
}

}  // namespace

extern "C" {

const char* poolkp_status_name(poolkp_status status) {
  switch (status) {
    case POOLKP_OK: return "ok";
    case POOLKP_ERR_INVALID_ARGUMENT: return "input";
    case POOLKP_ERR_CONFIG: return "config";
    case POOLKP_ERR_OUT_OF_BOUNDS: return "out_of_bounds";
    case POOLKP_ERR_NUMERIC: return "numeric";
    case POOLKP_ERR_SHAPE: return "shape";
    case POOLKP_ERR_DOMAIN: return "domain";
    case POOLKP_ERR_FORMAT: return "format";
    case POOLKP_ERR_VALIDATION: return "validation";
    case POOLKP_ERR_PARSE: return "parse";
    case POOLKP_ERR_IO: return "io";
    case POOLKP_ERR_RANK: return "rank";
    case POOLKP_ERR_DEGENERATE: return "degenerate";
    case POOLKP_ERR_NO_MODEL: return "no_model";
    case POOLKP_ERR_INSUFFICIENT: return "insufficient";
    case POOLKP_ERR_PROJECTIVE: return "projective";
    case POOLKP_ERR_SAMPLING: return "sampling";
    case POOLKP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* poolkp_last_error(void) { return g_last_error.c_str(); }

poolkp_status poolkp_channel_index(poolkp_class cls, int index, int* out_channel) {
  return guarded([&] {
    require(out_channel);
    *out_channel = poolkp::canonical_channel_index(to_id(cls, index));
  });
}

poolkp_status poolkp_channel_keypoint(int channel, poolkp_class* out_cls, int* out_index) {
  return guarded([&] {
    require(out_cls, out_index);
    const auto id = poolkp::keypoint_from_channel(channel);
    *out_cls = static_cast<poolkp_class>(id.cls);
    *out_index = id.index;
  });
}

void poolkp_pool_config_default(poolkp_pool_config* config) {
  if (!config) return;
  const poolkp::PoolConfig d;
  *config = {d.lanes, d.length_m, d.bumpers ? 1 : 0, d.bulkhead ? 1 : 0, d.lane_width_m, d.bumper_width_m, d.bulkhead_width_m, 0.0};
}

poolkp_status poolkp_model_create(const poolkp_pool_config* config, poolkp_model** out) {
  return guarded([&] {
    require(config, out);
    poolkp::PoolConfig c;
    c.lanes = config->lanes;
    c.length_m = config->length_m;
    c.bumpers = config->bumpers != 0;
    c.bulkhead = config->bulkhead != 0;
    c.lane_width_m = config->lane_width_m;
    c.bumper_width_m = config->bumper_width_m;
    c.bulkhead_width_m = config->bulkhead_width_m;
    if (config->bulkhead_x_m > 0.0) c.bulkhead_x_m = config->bulkhead_x_m;
    *out = new poolkp_model{poolkp::build_base_model(c)};
  });
}

poolkp_status poolkp_model_load(const char* path, poolkp_model** out) {
  return guarded([&] {
    require(path, out);
    *out = new poolkp_model{poolkp::load_model(path)};
  });
}

poolkp_status poolkp_model_save(const poolkp_model* model, const char* path) {
  return guarded([&] {
    require(model, path);
    poolkp::save_model(model->model, path);
  });
}

poolkp_status poolkp_model_entry_get(const poolkp_model* model, int channel, poolkp_model_entry* out) {
  return guarded([&] {
    require(model, out);
    const auto& e = model->model.entry(poolkp::keypoint_from_channel(channel));
    out->cls = static_cast<poolkp_class>(e.id.cls);
    out->index = e.id.index;
    out->exists = e.exists ? 1 : 0;
    out->horizontal_line = e.location.kind == poolkp::LocationKind::HorizontalLine ? 1 : 0;
    out->x_m = e.location.x_m;
    out->y_m = e.location.y_m;
  });
}

void poolkp_model_free(poolkp_model* model) { delete model; }

poolkp_status poolkp_volume_read(const char* path, poolkp_volume** out, int* out_channel_mismatch) {
  return guarded([&] {
    require(path, out);
    auto r = poolkp::read_volume(path);
    if (out_channel_mismatch) *out_channel_mismatch = r.channel_count_mismatch ? 1 : 0;
    *out = new poolkp_volume{std::move(r.volume)};
  });
}

poolkp_status poolkp_volume_write(const poolkp_volume* volume, const char* path) {
  return guarded([&] {
    require(volume, path);
    poolkp::write_volume(volume->volume, path);
  });
}

poolkp_status poolkp_volume_from_logits(int rows, int cols, int channels, const double* logits, poolkp_volume** out) {
  return guarded([&] {
    require(logits, out);
    if (rows <= 0 || cols <= 0 || channels <= 0) throw poolkp::Error(poolkp::ErrorKind::Shape, "dimensions must be positive");
    const std::size_t n = std::size_t(rows) * std::size_t(cols) * std::size_t(channels);
    *out = new poolkp_volume{poolkp::softmax_normalize(rows, cols, channels, {logits, n})};
  });
}

poolkp_status poolkp_volume_dims(const poolkp_volume* volume, int* rows, int* cols, int* channels) {
  return guarded([&] {
    require(volume);
    if (rows) *rows = volume->volume.rows();
    if (cols) *cols = volume->volume.cols();
    if (channels) *channels = volume->volume.channels();
  });
}

poolkp_status poolkp_volume_channel(const poolkp_volume* volume, int channel, const double** out) {
  return guarded([&] {
    require(volume, out);
    *out = volume->volume.channel(channel).data();
  });
}

poolkp_status poolkp_volume_validate(const poolkp_volume* volume) {
  return guarded([&] {
    require(volume);
    poolkp::validate_distributions(volume->volume);
  });
}

void poolkp_volume_free(poolkp_volume* volume) { delete volume; }

poolkp_status poolkp_channel_entropy(const double* values, size_t count, double* out_nats) {
  return guarded([&] {
    require(values, out_nats);
    *out_nats = poolkp::channel_entropy({values, count});
  });
}

poolkp_status poolkp_cross_entropy(const poolkp_volume* target, const poolkp_volume* pred, double* out_nats) {
  return guarded([&] {
    require(target, pred, out_nats);
    *out_nats = poolkp::cross_entropy_loss(target->volume, pred->volume);
  });
}

poolkp_status poolkp_annotation_load(const char* path, poolkp_annotation** out) {
  return guarded([&] {
    require(path, out);
    *out = new poolkp_annotation{poolkp::load_annotation(path)};
  });
}

poolkp_status poolkp_annotation_save(const poolkp_annotation* ann, const char* path) {
  return guarded([&] {
    require(ann, path);
    poolkp::save_annotation(ann->annotation, path);
  });
}

poolkp_status poolkp_annotation_dims(const poolkp_annotation* ann, int* rows, int* cols, size_t* points) {
  return guarded([&] {
    require(ann);
    if (rows) *rows = ann->annotation.rows;
    if (cols) *cols = ann->annotation.cols;
    if (points) *points = ann->annotation.points.size();
  });
}

void poolkp_annotation_free(poolkp_annotation* ann) { delete ann; }

poolkp_status poolkp_target_volume(const poolkp_annotation* ann, int rows, int cols, poolkp_volume** out) {
  return guarded([&] {
    require(ann, out);
    *out = new poolkp_volume{poolkp::make_target_volume(ann->annotation, rows, cols)};
  });
}

poolkp_status poolkp_decode(const poolkp_volume* volume, double beta, const char* frame_id, poolkp_detections** out) {
  return guarded([&] {
    require(volume, out);
    *out = new poolkp_detections{poolkp::decode(volume->volume, {beta}, frame_id ? frame_id : "")};
  });
}

poolkp_status poolkp_detections_load(const char* path, poolkp_detections** out) {
  return guarded([&] {
    require(path, out);
    *out = new poolkp_detections{poolkp::load_detections(path)};
  });
}

poolkp_status poolkp_detections_save(const poolkp_detections* det, const char* path) {
  return guarded([&] {
    require(det, path);
    poolkp::save_detections(det->detections, path);
  });
}

poolkp_status poolkp_detections_frame_id(const poolkp_detections* det, const char** out) {
  return guarded([&] {
    require(det, out);
    *out = det->detections.frame_id.c_str();
  });
}

poolkp_status poolkp_detections_count(const poolkp_detections* det, size_t* out) {
  return guarded([&] {
    require(det, out);
    *out = det->detections.detections.size();
  });
}

poolkp_status poolkp_detections_get(const poolkp_detections* det, size_t i, poolkp_detection* out) {
  return guarded([&] {
    require(det, out);
    if (i >= det->detections.detections.size()) throw poolkp::Error(poolkp::ErrorKind::Input, "detection index out of range");
    const auto& d = det->detections.detections[i];
    *out = {static_cast<poolkp_class>(d.id.cls), d.id.index, d.u, d.v, d.entropy};
  });
}

void poolkp_detections_free(poolkp_detections* det) { delete det; }

poolkp_status poolkp_import_cvat(const char* xml_path, double scale_factor, const char* out_dir, size_t* out_frames) {
  return guarded([&] {
    require(xml_path, out_dir);
    const auto written = poolkp::import_cvat(xml_path, scale_factor, out_dir);
    if (out_frames) *out_frames = written.size();
  });
}

poolkp_status poolkp_evaluate_dirs(const char* pred_dir, const char* gt_dir, double tolerance_px, double beta, poolkp_report** out) {
  return guarded([&] {
    require(pred_dir, gt_dir, out);
    const auto frames = poolkp::load_eval_frames(pred_dir, gt_dir, beta);
    *out = new poolkp_report{poolkp::evaluate(frames, {tolerance_px, beta})};
  });
}

poolkp_status poolkp_report_mean_f1(const poolkp_report* report, double* out) {
  return guarded([&] {
    require(report, out);
    *out = report->report.mean_f1;
  });
}

poolkp_status poolkp_report_frame_count(const poolkp_report* report, size_t* out) {
  return guarded([&] {
    require(report, out);
    *out = report->report.per_frame.size();
  });
}

poolkp_status poolkp_report_class(const poolkp_report* report, poolkp_class cls, poolkp_scores* out) {
  return guarded([&] {
    require(report, out);
    const auto id = to_id(cls, 0);
    *out = to_c(report->report.per_class.at(id.cls));
  });
}

poolkp_status poolkp_report_keypoint(const poolkp_report* report, int channel, poolkp_scores* out) {
  return guarded([&] {
    require(report, out);
    if (channel < 0 || channel >= POOLKP_CHANNELS) throw poolkp::Error(poolkp::ErrorKind::Input, "channel out of range");
    *out = to_c(report->report.per_keypoint[static_cast<std::size_t>(channel)]);
  });
}

poolkp_status poolkp_report_save_json(const poolkp_report* report, const char* path) {
  return guarded([&] {
    require(report, path);
    poolkp::detail::write_json_file(path, poolkp::to_json(report->report));
  });
}

poolkp_status poolkp_report_save_class_csv(const poolkp_report* report, const char* path) {
  return guarded([&] {
    require(report, path);
    poolkp::detail::write_text_file(path, poolkp::per_class_csv(report->report));
  });
}

poolkp_status poolkp_report_save_keypoint_csv(const poolkp_report* report, const char* path) {
  return guarded([&] {
    require(report, path);
    poolkp::detail::write_text_file(path, poolkp::per_keypoint_csv(report->report));
  });
}

void poolkp_report_free(poolkp_report* report) { delete report; }

double poolkp_f1_from_pr(double precision, double recall) { return poolkp::f1(precision, recall); }

poolkp_status poolkp_optimal_beta(int lanes, double* out) {
  return guarded([&] {
    require(out);
    *out = poolkp::optimal_beta_for_lanes(lanes);
  });
}

poolkp_status poolkp_parse_grid(const char* spec, double* values, size_t capacity, size_t* count) {
  return guarded([&] {
    require(spec, count);
    const auto grid = poolkp::parse_grid(spec);
    *count = grid.size();
    if (!values) return;
    if (capacity < grid.size()) throw poolkp::Error(poolkp::ErrorKind::Input, "grid buffer too small");
    std::copy(grid.begin(), grid.end(), values);
  });
}

poolkp_status poolkp_sweep_beta_dirs(const char* pred_dir, const char* gt_dir, double tolerance_px, const double* betas, size_t n,
                                     poolkp_curve** out) {
  return guarded([&] {
    require(pred_dir, gt_dir, betas, out);
    const auto frames = poolkp::load_sweep_frames(pred_dir, gt_dir);
    *out = new poolkp_curve{poolkp::beta_sweep(frames, {betas, n}, tolerance_px)};
  });
}

poolkp_status poolkp_sweep_tolerance_dirs(const char* pred_dir, const char* gt_dir, double beta, const double* tolerances, size_t n,
                                          poolkp_curve** out) {
  return guarded([&] {
    require(pred_dir, gt_dir, tolerances, out);
    const auto frames = poolkp::load_sweep_frames(pred_dir, gt_dir);
    const double betas[1] = {beta};
    *out = new poolkp_curve{poolkp::tolerance_sweep(frames, betas, {tolerances, n})};
  });
}

poolkp_status poolkp_curve_size(const poolkp_curve* curve, size_t* out) {
  return guarded([&] {
    require(curve, out);
    *out = curve->points.size();
  });
}

poolkp_status poolkp_curve_point(const poolkp_curve* curve, size_t i, double* x, double* mean_f1, long* detections) {
  return guarded([&] {
    require(curve);
    if (i >= curve->points.size()) throw poolkp::Error(poolkp::ErrorKind::Input, "curve index out of range");
    const auto& p = curve->points[i];
    if (x) *x = p.x;
    if (mean_f1) *mean_f1 = p.mean_f1;
    if (detections) *detections = p.detections;
  });
}

poolkp_status poolkp_curve_save_csv(const poolkp_curve* curve, const char* path) {
  return guarded([&] {
    require(curve, path);
    poolkp::detail::write_text_file(path, poolkp::curve_csv(curve->points));
  });
}

void poolkp_curve_free(poolkp_curve* curve) { delete curve; }

void poolkp_ransac_params_default(poolkp_ransac_params* params) {
  if (!params) return;
  const poolkp::RansacParams d;
  *params = {d.iterations, d.inlier_threshold, d.seed};
}

poolkp_status poolkp_localize(const poolkp_detections* det, const poolkp_model* model, double scale_px_per_m,
                              const poolkp_ransac_params* params, poolkp_localization* out) {
  return guarded([&] {
    require(det, model, params, out);
    const auto loc = poolkp::localize_frame(det->detections, model->model, scale_px_per_m,
                                            {params->iterations, params->inlier_threshold_px, params->seed});
    const auto h = loc.h.row_major();
    std::copy(h.begin(), h.end(), out->h);
    out->inliers = loc.inlier_count;
    out->mean_residual_px = loc.mean_residual_px;
    out->point_constraints = loc.point_constraints;
    out->line_constraints = loc.line_constraints;
  });
}

poolkp_status poolkp_localization_save(const poolkp_localization* loc, const char* frame_id, const char* path) {
  return guarded([&] {
    require(loc, path);
    const auto h = poolkp::Homography::from_row_major(std::span<const double, 9>(loc->h, 9));
    poolkp::detail::write_json_file(path, poolkp::homography_json(frame_id ? frame_id : "", h, loc->inliers, loc->mean_residual_px,
                                                                  loc->point_constraints, loc->line_constraints));
  });
}

void poolkp_synth_params_default(poolkp_synth_params* params) {
  if (!params) return;
  const poolkp::SynthParams d;
  *params = {d.frame_rows,         d.frame_cols,         d.view == poolkp::ViewMode::Partial ? 1 : 0, d.noise.loc_sigma_px,
             d.noise.dropout_rate, d.noise.false_positive_rate, d.noise.peak_mass, d.scale_px_per_m, d.seed};
}

poolkp_status poolkp_synth_generate(const poolkp_model* model, const poolkp_synth_params* params, int count, const char* out_dir) {
  return guarded([&] {
    require(model, params, out_dir);
    poolkp::SynthParams p;
    p.frame_rows = params->frame_rows;
    p.frame_cols = params->frame_cols;
    p.view = params->partial_view ? poolkp::ViewMode::Partial : poolkp::ViewMode::Full;
    p.noise = {params->loc_sigma_px, params->dropout_rate, params->false_positive_rate, params->peak_mass};
    p.scale_px_per_m = params->scale_px_per_m;
    p.seed = params->seed;
    poolkp::generate_dataset(model->model, count, p, out_dir);
  });
}

}  // extern "C"
