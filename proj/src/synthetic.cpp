#include "poolkp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include <Eigen/LU>

#include "io_util.hpp"
#include "parallel.hpp"
#include "poolkp/annotation_io.hpp"
#include "poolkp/error.hpp"

namespace poolkp {

namespace {

namespace fs = std::filesystem;

constexpr double kFullViewMargin = 0.05;

Eigen::Matrix3d translation(double tx, double ty) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 2) = tx;
  t(1, 2) = ty;
  return t;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Homogeneous w of `m` at p, normalised by the bottom-row magnitude.
double relative_w(const Eigen::Matrix3d& m, Point2 p) {
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  return w / (std::abs(m(2, 0)) + std::abs(m(2, 1)) + std::abs(m(2, 2)));
}

bool inside(Point2 p, int rows, int cols) { return p.x >= 0.0 && p.x <= cols - 1 && p.y >= 0.0 && p.y <= rows - 1; }

std::array<Point2, 4> pool_corners(const BasePoolModel& model) {
  const double l = model.length_m(), w = model.width_m();
  return {Point2{0, 0}, Point2{l, 0}, Point2{0, w}, Point2{l, w}};
}

std::array<Point2, 4> frame_corners(int rows, int cols) {
  return {Point2{0, 0}, Point2{double(cols - 1), 0}, Point2{0, double(rows - 1)}, Point2{double(cols - 1), double(rows - 1)}};
}

// Visible fixed key-points span a non-degenerate region of the base plane.
bool enough_fixed_points(const BasePoolModel& model, const Eigen::Matrix3d& camera, int rows, int cols, int min_points) {
  std::vector<Point2> visible;
  for (const auto& e : model.entries()) {
    if (!e.exists || e.location.kind != LocationKind::FixedPoint) continue;
    const Point2 q = project(camera, Point2{e.location.x_m, e.location.y_m});
    if (inside(q, rows, cols)) visible.push_back({e.location.x_m, e.location.y_m});
  }
  if (static_cast<int>(visible.size()) < min_points || visible.size() < 4) return false;
  // Largest distance of any point from the line through the two most distant points.
  double best = 0.0;
  Point2 a, b;
  for (const auto& p : visible) {
    for (const auto& q : visible) {
      const double d = std::hypot(p.x - q.x, p.y - q.y);
      if (d > best) {
        best = d;
        a = p;
        b = q;
      }
    }
  }
  double spread = 0.0;
  for (const auto& p : visible) spread = std::max(spread, std::abs((p.x - a.x) * (b.y - a.y) - (p.y - a.y) * (b.x - a.x)) / best);
  return spread > 0.5;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string scene_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04llu", static_cast<unsigned long long>(index));
  return buf;
}

}  // namespace

void validate(const SynthParams& p) {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::Input, "synthetic parameters: " + what); };
  if (p.frame_rows < 2 || p.frame_cols < 2) bad("frame must be at least 2x2");
  if (!(p.noise.loc_sigma_px >= 0.0)) bad("loc_sigma must be >= 0");
  if (!(p.noise.dropout_rate >= 0.0 && p.noise.dropout_rate <= 1.0)) bad("dropout rate must lie in [0, 1]");
  if (!(p.noise.false_positive_rate >= 0.0 && p.noise.false_positive_rate <= 1.0)) bad("false-positive rate must lie in [0, 1]");
  if (!(p.noise.peak_mass > 0.0 && p.noise.peak_mass <= 1.0)) bad("peak mass must lie in (0, 1]");
  if (!(p.jitter.rotation_deg >= 0.0) || !(p.jitter.tilt >= 0.0) || !(p.jitter.shift_fraction >= 0.0)) bad("jitter bounds must be >= 0");
  if (!(p.jitter.zoom_min >= 1.0 && p.jitter.zoom_max >= p.jitter.zoom_min)) bad("zoom range must satisfy 1 <= min <= max");
  if (!(p.scale_px_per_m > 0.0)) bad("scale must be positive");
  if (p.max_attempts < 1) bad("max_attempts must be >= 1");
}

Homography sample_camera(const BasePoolModel& model, const SynthParams& params, std::mt19937_64& rng) {
  validate(params);
  const int rows = params.frame_rows, cols = params.frame_cols;
  const double length = model.length_m(), width = model.width_m();
  const double fit = std::min((cols - 1) * (1.0 - 2 * kFullViewMargin) / length, (rows - 1) * (1.0 - 2 * kFullViewMargin) / width);
  const double size = std::max(rows, cols);
  const auto& j = params.jitter;

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const double theta = uniform(rng, -j.rotation_deg, j.rotation_deg) * std::numbers::pi / 180.0;
    const double px = uniform(rng, -j.tilt, j.tilt) / size;
    const double py = uniform(rng, -j.tilt, j.tilt) / size;
    double zoom = 1.0, look_x = length / 2, look_y = width / 2, shift_u = 0.0, shift_v = 0.0;
    if (params.view == ViewMode::Partial) {
      zoom = uniform(rng, j.zoom_min, j.zoom_max);
      look_x = uniform(rng, 0.0, length);
      look_y = uniform(rng, 0.0, width);
    } else {
      shift_u = uniform(rng, -j.shift_fraction, j.shift_fraction) * cols;
      shift_v = uniform(rng, -j.shift_fraction, j.shift_fraction) * rows;
    }
    const double s = fit * zoom;

    Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
    scale(0, 0) = s;
    scale(1, 1) = -s;  // base y points up, image rows point down
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    rot(0, 0) = std::cos(theta);
    rot(0, 1) = -std::sin(theta);
    rot(1, 0) = std::sin(theta);
    rot(1, 1) = std::cos(theta);
    Eigen::Matrix3d persp = Eigen::Matrix3d::Identity();
    persp(2, 0) = px;
    persp(2, 1) = py;
    const Eigen::Matrix3d camera =
        translation((cols - 1) / 2.0 + shift_u, (rows - 1) / 2.0 + shift_v) * persp * rot * scale * translation(-look_x, -look_y);

    // Pool in front of the camera and frame corners away from the horizon.
    const auto corners = pool_corners(model);
    if (!std::ranges::all_of(corners, [&](Point2 p) { return relative_w(camera, p) > 0.2; })) continue;
    const Eigen::Matrix3d inv = camera.inverse();
    if (!std::ranges::all_of(frame_corners(rows, cols), [&](Point2 p) { return relative_w(inv, p) > 0.2; })) continue;

    Homography h(camera);
    const int clipped = clipped_wall_count(model, h, rows, cols);
    if (params.view == ViewMode::Full && clipped != 0) continue;
    if (params.view == ViewMode::Partial) {
      if (clipped == 0) continue;
      const Point2 centre = project(inv, Point2{(cols - 1) / 2.0, (rows - 1) / 2.0});
      if (!(centre.x > 0.0 && centre.x < length && centre.y > 0.0 && centre.y < width)) continue;
    }
    if (!enough_fixed_points(model, camera, rows, cols, params.min_fixed_points)) continue;
    return h;
  }
  throw Error(ErrorKind::Sampling, "no admissible camera after " + std::to_string(params.max_attempts) + " attempts");
}

Homography sample_camera(const BasePoolModel& model, const SynthParams& params) {
  std::mt19937_64 rng(params.seed);
  return sample_camera(model, params, rng);
}

int clipped_wall_count(const BasePoolModel& model, const Homography& camera, int rows, int cols) {
  const auto c = pool_corners(model);  // bl, br, tl, tr
  bool out[4];
  for (int i = 0; i < 4; ++i) out[i] = !inside(project(camera, c[static_cast<std::size_t>(i)]), rows, cols);
  // left (bl, tl), right (br, tr), bottom (bl, br), top (tl, tr)
  return int(out[0] || out[2]) + int(out[1] || out[3]) + int(out[0] || out[1]) + int(out[2] || out[3]);
}

FrameAnnotation project_scene(const BasePoolModel& model, const Homography& camera, int rows, int cols) {
  FrameAnnotation ann;
  ann.rows = rows;
  ann.cols = cols;
  const double length = model.length_m();
  const double right_edge = cols - 1;

  for (const auto& e : model.entries()) {
    if (!e.exists) continue;
    if (e.location.kind == LocationKind::FixedPoint) {
      const Point2 q = project(camera, Point2{e.location.x_m, e.location.y_m});
      if (inside(q, rows, cols)) ann.points.push_back({e.id, q.x, q.y});
      continue;
    }
    // Rope (or wall) line y = const from x = 0 to x = length, projected to a frame segment.
    const Point2 a = project(camera, Point2{0.0, e.location.y_m});
    const Point2 b = project(camera, Point2{length, e.location.y_m});
    const double edge = e.id.cls == KeyPointClass::FloatingLeft ? 0.0 : right_edge;
    if ((a.x - edge) * (b.x - edge) >= 0.0) continue;
    const double t = (edge - a.x) / (b.x - a.x);
    const double v = a.y + t * (b.y - a.y);
    if (v >= 0.0 && v <= rows - 1) ann.points.push_back({e.id, edge, v});
  }
  return ann;
}

HeatmapVolume synthesize_volume(const FrameAnnotation& ann, int rows, int cols, const NoiseParams& noise, std::mt19937_64& rng) {
  validate(ann);
  HeatmapVolume volume(rows, cols);
  const double factor = static_cast<double>(ann.rows) / rows;
  const std::size_t cells = volume.cells();
  const double flat = 1.0 / static_cast<double>(cells);
  const double rest = cells > 1 ? (1.0 - noise.peak_mass) / static_cast<double>(cells - 1) : 0.0;

  std::vector<const AnnotatedPoint*> present(kChannelCount, nullptr);
  for (const auto& p : ann.points) present[static_cast<std::size_t>(canonical_channel_index(p.id))] = &p;

  std::bernoulli_distribution drop(noise.dropout_rate);
  std::bernoulli_distribution spurious(noise.false_positive_rate);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_cell(0, cells - 1);

  for (int k = 0; k < kChannelCount; ++k) {
    auto ch = volume.channel(k);
    std::optional<std::size_t> peak;
    if (const AnnotatedPoint* p = present[static_cast<std::size_t>(k)]) {
      if (!drop(rng)) {
        const double du = noise.loc_sigma_px * jitter(rng);
        const double dv = noise.loc_sigma_px * jitter(rng);
        const int r = std::clamp(static_cast<int>(std::floor(p->v / factor + dv + 0.5)), 0, rows - 1);
        const int c = std::clamp(static_cast<int>(std::floor(p->u / factor + du + 0.5)), 0, cols - 1);
        peak = static_cast<std::size_t>(r) * cols + c;
      }
    } else if (spurious(rng)) {
      peak = any_cell(rng);
    }
    if (peak) {
      std::ranges::fill(ch, rest);
      ch[*peak] = noise.peak_mass;
    } else {
      std::ranges::fill(ch, flat);
    }
  }
  return volume;
}

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ splitmix64(index + 1)); }

Homography frame_to_base(const Homography& camera, double scale_px_per_m) {
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(0, 0) = scale_px_per_m;
  s(1, 1) = scale_px_per_m;
  return Homography(s * camera.matrix().inverse());
}

SynthScene generate_scene(const BasePoolModel& model, const SynthParams& params, std::uint64_t index, bool with_volume) {
  SynthScene scene;
  scene.id = scene_name(index);
  scene.seed = scene_seed(params.seed, index);
  std::mt19937_64 rng(scene.seed);
  scene.camera = sample_camera(model, params, rng);
  scene.homography_gt = frame_to_base(scene.camera, params.scale_px_per_m);
  scene.annotation = project_scene(model, scene.camera, params.frame_rows, params.frame_cols);
  scene.annotation.frame_id = scene.id;
  if (with_volume) scene.volume = synthesize_volume(scene.annotation, params.frame_rows, params.frame_cols, params.noise, rng);
  return scene;
}

DetectionSet detections_from_annotation(const FrameAnnotation& ann) {
  DetectionSet det{ann.frame_id, ann.rows, ann.cols, {}};
  auto points = ann.points;
  std::ranges::sort(points, {}, [](const AnnotatedPoint& p) { return canonical_channel_index(p.id); });
  for (const auto& p : points) det.detections.push_back({p.id, p.u, p.v, 0.0});
  return det;
}

nlohmann::json to_json(const SynthParams& p) {
  return {{"frame_rows", p.frame_rows},
          {"frame_cols", p.frame_cols},
          {"view", p.view == ViewMode::Full ? "full" : "partial"},
          {"jitter",
           {{"rotation_deg", p.jitter.rotation_deg},
            {"tilt", p.jitter.tilt},
            {"zoom_min", p.jitter.zoom_min},
            {"zoom_max", p.jitter.zoom_max},
            {"shift_fraction", p.jitter.shift_fraction}}},
          {"noise",
           {{"loc_sigma_px", p.noise.loc_sigma_px},
            {"dropout_rate", p.noise.dropout_rate},
            {"false_positive_rate", p.noise.false_positive_rate},
            {"peak_mass", p.noise.peak_mass}}},
          {"seed", p.seed},
          {"scale_px_per_m", p.scale_px_per_m},
          {"min_fixed_points", p.min_fixed_points}};
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json scenes = nlohmann::json::array();
  for (const auto& s : m.scenes) {
    scenes.push_back({{"id", s.id},
                      {"seed", s.seed},
                      {"annotation_path", s.annotation_path},
                      {"volume_path", s.volume_path},
                      {"homography_path", s.homography_path}});
  }
  return {{"params", m.params}, {"scenes", std::move(scenes)}};
}

Manifest generate_dataset(const BasePoolModel& model, int count, const SynthParams& params, const std::string& out_dir) {
  if (count < 0) throw Error(ErrorKind::Input, "scene count must be >= 0");
  validate(params);
  const fs::path root(out_dir);
  for (const char* sub : {"annotations", "volumes", "homographies"}) {
    std::error_code ec;
    fs::create_directories(root / sub, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + (root / sub).string() + "': " + ec.message());
  }

  Manifest manifest;
  manifest.params = to_json(params);
  manifest.params["model"] = to_json(model.config());
  manifest.params["count"] = count;
  manifest.scenes.resize(static_cast<std::size_t>(count));

  detail::parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    const SynthScene scene = generate_scene(model, params, i);
    ManifestScene& entry = manifest.scenes[i];
    entry.id = scene.id;
    entry.seed = scene.seed;
    entry.annotation_path = "annotations/" + scene.id + ".json";
    entry.volume_path = "volumes/" + scene.id + ".pkhv";
    entry.homography_path = "homographies/" + scene.id + ".json";
    save_annotation(scene.annotation, (root / entry.annotation_path).string());
    write_volume(scene.volume, (root / entry.volume_path).string());
    int points = 0, lines = 0;
    for (const auto& p : scene.annotation.points) (is_floating(p.id.cls) ? lines : points)++;
    detail::write_json_file((root / entry.homography_path).string(),
                            homography_json(scene.id, scene.homography_gt, static_cast<int>(scene.annotation.points.size()), 0.0, points, lines));
  });

  detail::write_json_file((root / "manifest.json").string(), to_json(manifest));
  return manifest;
}

}  // namespace poolkp
