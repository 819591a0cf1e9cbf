#include "poolkp/homography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "io_util.hpp"
#include "poolkp/error.hpp"

namespace poolkp {

namespace {

constexpr double kInfinityGuard = 1e-12;
// Smallest admissible ratio of the 8th to the 1st singular value.
constexpr double kRankTolerance = 1e-10;

Eigen::Matrix3d canonicalize(Eigen::Matrix3d m) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorKind::Degenerate, "homography has zero or non-finite norm");
  m /= norm;
  // Row-major order: the last nonzero entry in h11..h33 decides the sign.
  for (int i = 8; i >= 0; --i) {
    const double v = m(i / 3, i % 3);
    if (std::abs(v) > 1e-15) {
      if (v < 0.0) m = -m;
      break;
    }
  }
  return m;
}

// Similarity sending the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Point2>& pts) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  if (pts.empty()) return t;
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0.0 ? std::sqrt(2.0) / mean : 1.0;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

// Whether every image point lies on one line (coincident points included).
bool image_points_collinear(std::span<const Correspondence> corrs) {
  if (corrs.size() < 3) return true;
  const Point2 a = corrs[0].image;
  std::size_t far = 0;
  double best = 0.0;
  for (std::size_t i = 1; i < corrs.size(); ++i) {
    const double d = std::hypot(corrs[i].image.x - a.x, corrs[i].image.y - a.y);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  if (best <= 1e-12) return true;
  const Point2 b = corrs[far].image;
  const double dx = (b.x - a.x) / best, dy = (b.y - a.y) / best;
  for (const auto& c : corrs) {
    const double off = std::abs((c.image.x - a.x) * dy - (c.image.y - a.y) * dx);
    if (off > 1e-9 * std::max(1.0, best)) return false;
  }
  return true;
}

double total_inlier_residual(const std::vector<double>& res, double threshold, int* count) {
  double total = 0.0;
  *count = 0;
  for (double r : res) {
    if (r <= threshold) {
      total += r;
      ++*count;
    }
  }
  return total;
}

}  // namespace

Homography::Homography() : m_(canonicalize(Eigen::Matrix3d::Identity())) {}

Homography::Homography(const Eigen::Matrix3d& m) : m_(canonicalize(m)) {
  if (std::abs(m_.determinant()) <= 1e-12) throw Error(ErrorKind::Degenerate, "homography is singular");
}

Homography Homography::from_row_major(std::span<const double, 9> h) {
  Eigen::Matrix3d m;
  m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  return Homography(m);
}

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> out{};
  for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(i)] = m_(i / 3, i % 3);
  return out;
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Homography Homography::compose(const Homography& other) const { return Homography(m_ * other.m_); }

Point2 project(const Eigen::Matrix3d& h, Point2 p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x, p.y, 1.0);
  // Scale-free test: compare the denominator against the bottom row's magnitude.
  const double scale = std::abs(h(2, 0) * p.x) + std::abs(h(2, 1) * p.y) + std::abs(h(2, 2));
  if (!(std::abs(q.z()) > kInfinityGuard * std::max(scale, 1e-300)) || !std::isfinite(q.z()))
    throw Error(ErrorKind::Projective, "point maps to infinity");
  return {q.x() / q.z(), q.y() / q.z()};
}

Point2 project(const Homography& h, Point2 p) { return project(h.matrix(), p); }

int equation_count(std::span<const Correspondence> corrs) {
  int n = 0;
  for (const auto& c : corrs) n += c.kind == CorrespondenceKind::PointPoint ? 2 : 1;
  return n;
}

double residual(const Homography& h, const Correspondence& c) {
  Point2 q;
  try {
    q = project(h, c.image);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  if (c.kind == CorrespondenceKind::PointPoint) return std::hypot(q.x - c.base.x, q.y - c.base.y);
  return std::abs(q.y - c.base.y);
}

Homography estimate_dlt(std::span<const Correspondence> corrs) {
  const auto points = std::count_if(corrs.begin(), corrs.end(), [](const auto& c) { return c.kind == CorrespondenceKind::PointPoint; });
  if (image_points_collinear(corrs))
    throw Error(ErrorKind::Degenerate, "image points are collinear; no homography is determined");
  if (points < 3)
    throw Error(ErrorKind::Degenerate, "at least 3 point correspondences are needed; horizontal-line constraints cannot fix x");
  const int equations = equation_count(corrs);
  if (equations < 8) throw Error(ErrorKind::Rank, "need at least 8 constraint equations, have " + std::to_string(equations));

  std::vector<Point2> image, base;
  for (const auto& c : corrs) {
    image.push_back(c.image);
    if (c.kind == CorrespondenceKind::PointPoint) base.push_back(c.base);
  }
  const Eigen::Matrix3d t_img = normalizing_transform(image);
  const Eigen::Matrix3d t_base = normalizing_transform(base);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(equations, 9);
  int row = 0;
  for (const auto& c : corrs) {
    const Eigen::Vector3d p = t_img * Eigen::Vector3d(c.image.x, c.image.y, 1.0);
    const double u = p.x(), v = p.y();
    // t_base is a similarity without rotation, so horizontal lines stay horizontal.
    const Eigen::Vector3d q = t_base * Eigen::Vector3d(c.base.x, c.base.y, 1.0);
    if (c.kind == CorrespondenceKind::PointPoint) {
      a.row(row++) << u, v, 1, 0, 0, 0, -q.x() * u, -q.x() * v, -q.x();
    }
    a.row(row++) << 0, 0, 0, u, v, 1, -q.y() * u, -q.y() * v, -q.y();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() < 8 || !(sv(7) > kRankTolerance * sv(0)))
    throw Error(ErrorKind::Degenerate, "constraint system has numerical rank below 8");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(t_base.inverse() * hn * t_img);
}

RansacResult estimate_ransac(std::span<const Correspondence> corrs, const RansacParams& params) {
  if (params.iterations < 1) throw Error(ErrorKind::Input, "RANSAC needs at least one iteration");
  if (!(params.inlier_threshold > 0.0)) throw Error(ErrorKind::Input, "inlier threshold must be positive");
  std::vector<std::size_t> point_idx, line_idx;
  for (std::size_t i = 0; i < corrs.size(); ++i)
    (corrs[i].kind == CorrespondenceKind::PointPoint ? point_idx : line_idx).push_back(i);
  if (point_idx.size() < 3)
    throw Error(ErrorKind::Degenerate, "at least 3 point correspondences are needed; horizontal-line constraints cannot fix x");
  if (point_idx.size() < 4 && line_idx.size() < 2) throw Error(ErrorKind::Rank, "not enough correspondences for a minimal sample");

  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> order(corrs.size());
  std::iota(order.begin(), order.end(), 0);

  std::optional<Homography> best;
  int best_count = 0;
  double best_total = std::numeric_limits<double>::infinity();
  std::vector<double> res(corrs.size());
  std::vector<Correspondence> sample;

  for (int it = 0; it < params.iterations; ++it) {
    // Scan a random order, keeping points until 4 and at most 2 lines;
    // a sample closes at 4 points or at 3 points + 2 lines.
    sample.clear();
    int points = 0, lines = 0;
    for (std::size_t j = 0; j < order.size(); ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, order.size() - 1);
      std::swap(order[j], order[pick(rng)]);
      const auto& c = corrs[order[j]];
      if (c.kind == CorrespondenceKind::PointPoint) {
        if (points == 4) continue;
        ++points;
      } else {
        if (lines == 2) continue;
        ++lines;
      }
      sample.push_back(c);
      if (points == 4 || (points == 3 && lines == 2)) break;
    }

    Homography h;
    try {
      h = estimate_dlt(sample);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t i = 0; i < corrs.size(); ++i) res[i] = residual(h, corrs[i]);
    int count = 0;
    const double total = total_inlier_residual(res, params.inlier_threshold, &count);
    if (count > best_count || (count == best_count && total < best_total)) {
      best = h;
      best_count = count;
      best_total = total;
    }
  }
  if (!best) throw Error(ErrorKind::NoModel, "no RANSAC sample produced a valid homography");

  // Refit on the consensus set.
  std::vector<Correspondence> consensus;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (residual(*best, corrs[i]) <= params.inlier_threshold) consensus.push_back(corrs[i]);
  }
  Homography refined;
  try {
    refined = estimate_dlt(consensus);
  } catch (const Error& e) {
    throw Error(ErrorKind::NoModel, std::string("consensus set does not determine a homography: ") + e.what());
  }

  RansacResult out;
  out.h = refined;
  out.inliers.resize(corrs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double r = residual(refined, corrs[i]);
    out.inliers[i] = r <= params.inlier_threshold;
    if (out.inliers[i]) {
      ++out.inlier_count;
      total += r;
    }
  }
  if (out.inlier_count == 0) throw Error(ErrorKind::NoModel, "refined homography has no inliers");
  out.mean_inlier_residual = total / out.inlier_count;
  return out;
}

std::vector<Correspondence> correspondences_from_detections(const DetectionSet& det, const BasePoolModel& model, double scale_px_per_m) {
  if (!(scale_px_per_m > 0.0)) throw Error(ErrorKind::Input, "scale must be positive");
  validate(det);
  std::vector<Correspondence> corrs;
  for (const auto& d : det.detections) {
    const ModelEntry& e = model.entry(d.id);
    if (!e.exists) throw Error(ErrorKind::Validation, keypoint_label(d.id) + " does not exist in this pool model");
    Correspondence c;
    c.id = d.id;
    c.image = {d.u, d.v};
    c.base.y = e.location.y_m * scale_px_per_m;
    if (e.location.kind == LocationKind::FixedPoint) {
      c.kind = CorrespondenceKind::PointPoint;
      c.base.x = e.location.x_m * scale_px_per_m;
    } else {
      c.kind = CorrespondenceKind::PointOnHorizontalLine;
    }
    corrs.push_back(c);
  }
  return corrs;
}

Localization localize_frame(const DetectionSet& det, const BasePoolModel& model, double scale_px_per_m, const RansacParams& params) {
  Localization loc;
  loc.frame_id = det.frame_id;
  loc.correspondences = correspondences_from_detections(det, model, scale_px_per_m);
  const int equations = equation_count(loc.correspondences);
  if (equations < 8) {
    std::ostringstream msg;
    msg << "frame '" << det.frame_id << "' yields " << equations << " constraint equations (need 8) from:";
    if (loc.correspondences.empty()) msg << " nothing";
    for (const auto& c : loc.correspondences) msg << ' ' << keypoint_label(c.id);
    throw Error(ErrorKind::Insufficient, msg.str());
  }
  const RansacResult r = estimate_ransac(loc.correspondences, params);
  loc.h = r.h;
  loc.inliers = r.inliers;
  loc.inlier_count = r.inlier_count;
  loc.mean_residual_px = r.mean_inlier_residual;
  for (std::size_t i = 0; i < loc.correspondences.size(); ++i) {
    if (!loc.inliers[i]) continue;
    (loc.correspondences[i].kind == CorrespondenceKind::PointPoint ? loc.point_constraints : loc.line_constraints)++;
  }
  return loc;
}

double corner_error(const Homography& a, const Homography& b, int rows, int cols) {
  double worst = 0.0;
  for (Point2 p : {Point2{0, 0}, Point2{double(cols - 1), 0}, Point2{0, double(rows - 1)}, Point2{double(cols - 1), double(rows - 1)}}) {
    const Point2 qa = project(a, p);
    const Point2 qb = project(b, p);
    worst = std::max(worst, std::hypot(qa.x - qb.x, qa.y - qb.y));
  }
  return worst;
}

nlohmann::json homography_json(const std::string& frame_id, const Homography& h, int inliers, double mean_residual_px, int points,
                               int lines) {
  return {{"frame_id", frame_id},
          {"h", h.row_major()},
          {"inliers", inliers},
          {"mean_residual_px", mean_residual_px},
          {"constraints", {{"point", points}, {"line", lines}}}};
}

nlohmann::json to_json(const Localization& loc) {
  return homography_json(loc.frame_id, loc.h, loc.inlier_count, loc.mean_residual_px, loc.point_constraints, loc.line_constraints);
}

Homography homography_from_json(const nlohmann::json& j) {
  const auto& h = detail::require_field(j, "h");
  if (!h.is_array() || h.size() != 9) throw Error(ErrorKind::Validation, "field 'h' must hold 9 numbers");
  std::array<double, 9> v{};
  for (std::size_t i = 0; i < 9; ++i) {
    if (!h[i].is_number()) throw Error(ErrorKind::Validation, "field 'h' must hold 9 numbers");
    v[i] = h[i].get<double>();
  }
  return Homography::from_row_major(v);
}

}  // namespace poolkp
