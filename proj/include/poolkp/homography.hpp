#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolkp/heatmap.hpp"
#include "poolkp/pool_model.hpp"

namespace poolkp {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// 3x3 projective map, stored with unit Frobenius norm and a positive last
/// nonzero entry so equal maps compare equal.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const Eigen::Matrix3d& m);
  static Homography from_row_major(std::span<const double, 9> h);

  const Eigen::Matrix3d& matrix() const { return m_; }
  std::array<double, 9> row_major() const;
  Homography inverse() const;
  /// this * other: apply `other` first.
  Homography compose(const Homography& other) const;

 private:
  Eigen::Matrix3d m_;
};

/// Throws Error(Projective) when the point maps to infinity.
Point2 project(const Homography& h, Point2 p);
Point2 project(const Eigen::Matrix3d& h, Point2 p);

enum class CorrespondenceKind { PointPoint, PointOnHorizontalLine };

struct Correspondence {
  CorrespondenceKind kind = CorrespondenceKind::PointPoint;
  Point2 image;
  Point2 base;  // base.x unused for PointOnHorizontalLine
  KeyPointId id;
};

/// Equations contributed: 2 per point, 1 per horizontal line.
int equation_count(std::span<const Correspondence> corrs);

/// Reprojection distance for points, |projected y - line y| for lines, in
/// base units. Infinite when the image point maps to infinity.
double residual(const Homography& h, const Correspondence& c);

/// Normalized DLT on stacked point and line rows.
Homography estimate_dlt(std::span<const Correspondence> corrs);

struct RansacParams {
  int iterations = 1000;
  double inlier_threshold = 3.0;  // base units (base pixels in localize_frame)
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography h;
  std::vector<bool> inliers;
  int inlier_count = 0;
  double mean_inlier_residual = 0.0;
};

RansacResult estimate_ransac(std::span<const Correspondence> corrs, const RansacParams& params);

struct Localization {
  std::string frame_id;
  Homography h;  // frame px -> base px
  std::vector<Correspondence> correspondences;
  std::vector<bool> inliers;
  int inlier_count = 0;
  double mean_residual_px = 0.0;
  int point_constraints = 0;  // among inliers
  int line_constraints = 0;
};

/// Fixed key-points become point correspondences, floating ones horizontal
/// line constraints, all in base pixels at `scale_px_per_m`.
std::vector<Correspondence> correspondences_from_detections(const DetectionSet& det, const BasePoolModel& model, double scale_px_per_m);

Localization localize_frame(const DetectionSet& det, const BasePoolModel& model, double scale_px_per_m, const RansacParams& params);

/// Largest distance between where `a` and `b` send the frame corners
/// (0,0), (cols-1,0), (0,rows-1), (cols-1,rows-1).
double corner_error(const Homography& a, const Homography& b, int rows, int cols);

nlohmann::json to_json(const Localization& loc);
/// {frame_id, h, inliers, mean_residual_px, constraints:{point, line}}.
nlohmann::json homography_json(const std::string& frame_id, const Homography& h, int inliers, double mean_residual_px, int points,
                               int lines);
Homography homography_from_json(const nlohmann::json& j);

}  // namespace poolkp
