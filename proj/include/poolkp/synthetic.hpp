#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "poolkp/heatmap.hpp"
#include "poolkp/homography.hpp"
#include "poolkp/pool_model.hpp"

namespace poolkp {

enum class ViewMode { Full, Partial };

struct CameraJitter {
  double rotation_deg = 5.0;      // |in-plane rotation| bound
  double tilt = 0.25;             // |perspective coefficient| * max(rows, cols)
  double zoom_min = 1.6;          // partial views only; full views use 1
  double zoom_max = 3.0;
  double shift_fraction = 0.02;   // full views: frame-centre shift as a fraction of frame size
};

struct NoiseParams {
  double loc_sigma_px = 0.0;
  double dropout_rate = 0.0;
  double false_positive_rate = 0.0;
  double peak_mass = 1.0;  // (0, 1]
};

struct SynthParams {
  int frame_rows = 288;
  int frame_cols = 512;
  ViewMode view = ViewMode::Partial;
  CameraJitter jitter;
  NoiseParams noise;
  std::uint64_t seed = 0;
  double scale_px_per_m = 20.0;  // base-image scale of the ground-truth homography
  int min_fixed_points = 4;      // visible, non-collinear fixed key-points per scene
  int max_attempts = 1000;
};

void validate(const SynthParams& params);

/// Base (meters) -> frame (pixels). Deterministic in `rng`.
Homography sample_camera(const BasePoolModel& model, const SynthParams& params, std::mt19937_64& rng);
/// Seeds a generator from params.seed.
Homography sample_camera(const BasePoolModel& model, const SynthParams& params);

/// Number of walls (left, right, bottom, top) with at least one end outside the frame.
int clipped_wall_count(const BasePoolModel& model, const Homography& camera, int rows, int cols);

/// Fixed key-points inside the frame and lane-rope crossings of the frame's
/// left (u = 0) and right (u = cols - 1) edges.
FrameAnnotation project_scene(const BasePoolModel& model, const Homography& camera, int rows, int cols);

HeatmapVolume synthesize_volume(const FrameAnnotation& ann, int rows, int cols, const NoiseParams& noise, std::mt19937_64& rng);

struct SynthScene {
  std::string id;
  std::uint64_t seed = 0;
  Homography camera;         // base meters -> frame px
  Homography homography_gt;  // frame px -> base px
  FrameAnnotation annotation;
  HeatmapVolume volume;
};

/// Sub-seed of scene `index`; scenes are independent of generation order.
std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index);

/// Scene `index` of a dataset. With `with_volume` false the heatmap is skipped.
SynthScene generate_scene(const BasePoolModel& model, const SynthParams& params, std::uint64_t index, bool with_volume = true);

/// Frame px -> base px map for a camera.
Homography frame_to_base(const Homography& camera, double scale_px_per_m);

/// Perfect-detector view of an annotation at its own resolution (entropy 0).
DetectionSet detections_from_annotation(const FrameAnnotation& ann);

struct ManifestScene {
  std::string id;
  std::uint64_t seed = 0;
  std::string annotation_path;
  std::string volume_path;
  std::string homography_path;
};

struct Manifest {
  nlohmann::json params;
  std::vector<ManifestScene> scenes;
};

nlohmann::json to_json(const SynthParams& params);
nlohmann::json to_json(const Manifest& manifest);

/// Writes annotations/, volumes/, homographies/ and manifest.json under out_dir.
Manifest generate_dataset(const BasePoolModel& model, int count, const SynthParams& params, const std::string& out_dir);

}  // namespace poolkp
