#include "poolkp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "poolkp/error.hpp"

namespace poolkp {

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

std::string fixed6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

ScopeScore scope_of(const MatchCounts& c) {
  ScopeScore s;
  s.counts = c;
  s.total = c.tp + c.fn;
  if (s.total > 0 || c.fp > 0) s.scores = scores_of(c);
  return s;
}

void csv_row(std::ostringstream& out, std::string_view cls, const std::string& index, const ScopeScore& s) {
  out << cls << ',' << index << ',';
  if (s.scores) {
    out << fixed6(s.scores->precision) << ',' << fixed6(s.scores->recall) << ',' << fixed6(s.scores->f1);
  } else {
    out << "-,-,-";
  }
  out << ',' << s.total << '\n';
}

nlohmann::json scope_json(const ScopeScore& s) {
  nlohmann::json j = {{"tp", s.counts.tp}, {"fp", s.counts.fp}, {"fn", s.counts.fn}, {"total", s.total}};
  if (s.scores) {
    j["precision"] = s.scores->precision;
    j["recall"] = s.scores->recall;
    j["f1"] = s.scores->f1;
  } else {
    j["precision"] = nullptr;
    j["recall"] = nullptr;
    j["f1"] = nullptr;
  }
  return j;
}

}  // namespace

double precision(const MatchCounts& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const MatchCounts& c) { return ratio(c.tp, c.tp + c.fn); }

double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }
double f1(const MatchCounts& c) { return f1(precision(c), recall(c)); }

Scores scores_of(const MatchCounts& c) { return {precision(c), recall(c), f1(c)}; }

MatchCounts counts_of(ChannelOutcome outcome) {
  switch (outcome) {
    case ChannelOutcome::TruePositive: return {1, 0, 0};
    case ChannelOutcome::FalsePositive: return {0, 1, 0};
    case ChannelOutcome::Mislocalized: return {0, 1, 1};
    case ChannelOutcome::FalseNegative: return {0, 0, 1};
    case ChannelOutcome::None: break;
  }
  return {};
}

FrameMatch match_frame(const DetectionSet& det, const FrameAnnotation& gt, const EvalParams& params) {
  if (!(params.tolerance_px > 0.0)) throw Error(ErrorKind::Input, "tolerance must be positive");
  if (det.rows != gt.rows || det.cols != gt.cols)
    throw Error(ErrorKind::Shape, "frame '" + gt.frame_id + "': detections at " + std::to_string(det.rows) + "x" + std::to_string(det.cols) +
                                      ", ground truth at " + std::to_string(gt.rows) + "x" + std::to_string(gt.cols));
  validate(det);
  validate(gt);

  std::vector<const Detection*> by_channel(kChannelCount, nullptr);
  for (const auto& d : det.detections) by_channel[static_cast<std::size_t>(canonical_channel_index(d.id))] = &d;
  std::vector<const AnnotatedPoint*> truth(kChannelCount, nullptr);
  for (const auto& p : gt.points) truth[static_cast<std::size_t>(canonical_channel_index(p.id))] = &p;

  FrameMatch m;
  m.outcomes.resize(kChannelCount, ChannelOutcome::None);
  for (std::size_t k = 0; k < kChannelCount; ++k) {
    const Detection* d = by_channel[k];
    const AnnotatedPoint* g = truth[k];
    ChannelOutcome o = ChannelOutcome::None;
    if (d && g) {
      o = std::hypot(d->u - g->u, d->v - g->v) <= params.tolerance_px ? ChannelOutcome::TruePositive : ChannelOutcome::Mislocalized;
    } else if (d) {
      o = ChannelOutcome::FalsePositive;
    } else if (g) {
      o = ChannelOutcome::FalseNegative;
    }
    m.outcomes[k] = o;
    m.counts += counts_of(o);
  }
  return m;
}

EvalReport evaluate(std::span<const EvalFrame> frames, const EvalParams& params) {
  std::set<std::string> ids;
  for (const auto& f : frames) {
    if (f.detections.frame_id != f.ground_truth.frame_id)
      throw Error(ErrorKind::Input, "detections '" + f.detections.frame_id + "' paired with ground truth '" + f.ground_truth.frame_id + "'");
    if (!ids.insert(f.ground_truth.frame_id).second) throw Error(ErrorKind::Input, "duplicate frame id '" + f.ground_truth.frame_id + "'");
  }

  std::vector<FrameMatch> matches(frames.size());
  detail::parallel_for(frames.size(), [&](std::size_t i) { matches[i] = match_frame(frames[i].detections, frames[i].ground_truth, params); });

  EvalReport report;
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return frames[a].ground_truth.frame_id < frames[b].ground_truth.frame_id; });

  std::vector<MatchCounts> per_channel(kChannelCount);
  double f1_sum = 0.0;
  for (std::size_t i : order) {
    const auto& m = matches[i];
    report.per_frame.push_back({frames[i].ground_truth.frame_id, m.counts, scores_of(m.counts)});
    f1_sum += report.per_frame.back().scores.f1;
    report.totals += m.counts;
    for (std::size_t k = 0; k < kChannelCount; ++k) per_channel[k] += counts_of(m.outcomes[k]);
  }
  report.mean_f1 = frames.empty() ? 0.0 : f1_sum / static_cast<double>(frames.size());

  std::map<KeyPointClass, MatchCounts> per_class;
  for (auto c : kAllClasses) per_class[c] = {};
  for (int k = 0; k < kChannelCount; ++k) {
    per_class[keypoint_from_channel(k).cls] += per_channel[static_cast<std::size_t>(k)];
    report.per_keypoint.push_back(scope_of(per_channel[static_cast<std::size_t>(k)]));
  }
  for (const auto& [cls, counts] : per_class) report.per_class[cls] = scope_of(counts);
  return report;
}

std::vector<CurvePoint> beta_sweep(std::span<const SweepFrame> frames, std::span<const double> betas, double tolerance_px) {
  std::vector<CurvePoint> curve;
  for (double beta : betas) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorKind::Input, "beta grid values must lie in [0, 1]");
    std::vector<EvalFrame> eval(frames.size());
    long detections = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      eval[i] = {gate(frames[i].summary, {beta}), frames[i].ground_truth};
      eval[i].detections.frame_id = frames[i].ground_truth.frame_id;
      detections += static_cast<long>(eval[i].detections.detections.size());
    }
    curve.push_back({beta, evaluate(eval, {tolerance_px, beta}).mean_f1, detections});
  }
  return curve;
}

std::vector<CurvePoint> tolerance_sweep(std::span<const SweepFrame> frames, std::span<const double> betas,
                                        std::span<const double> tolerances) {
  if (betas.size() != 1 && betas.size() != frames.size())
    throw Error(ErrorKind::Input, "need one beta per frame or a single shared beta");
  std::vector<EvalFrame> eval(frames.size());
  long detections = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    eval[i] = {gate(frames[i].summary, {betas.size() == 1 ? betas[0] : betas[i]}), frames[i].ground_truth};
    eval[i].detections.frame_id = frames[i].ground_truth.frame_id;
    detections += static_cast<long>(eval[i].detections.detections.size());
  }
  std::vector<CurvePoint> curve;
  for (double tol : tolerances) {
    if (!(tol > 0.0)) throw Error(ErrorKind::Input, "tolerances must be positive");
    curve.push_back({tol, evaluate(eval, {tol, betas.empty() ? 0.0 : betas[0]}).mean_f1, detections});
  }
  return curve;
}

double optimal_beta_for_lanes(int lanes) {
  switch (lanes) {
    case 6: case 12: return 0.15;
    case 8: case 16: return 0.9;
    case 10: case 20: return 0.7;
    default: break;
  }
  throw Error(ErrorKind::Input, "no reference beta for " + std::to_string(lanes) + " lanes");
}

std::vector<double> parse_grid(const std::string& spec) {
  double a = 0.0, b = 0.0, step = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream in(spec);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
    throw Error(ErrorKind::Input, "grid must look like a:b:step, got '" + spec + "'");
  if (!(step > 0.0) || b < a || !std::isfinite(a) || !std::isfinite(b)) throw Error(ErrorKind::Input, "grid '" + spec + "' needs step > 0 and a <= b");
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
  if (n > 1'000'000) throw Error(ErrorKind::Input, "grid '" + spec + "' is too fine");
  std::vector<double> out;
  for (long i = 0; i < n; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : report.per_frame) {
    frames.push_back({{"frame_id", f.frame_id},
                      {"tp", f.counts.tp},
                      {"fp", f.counts.fp},
                      {"fn", f.counts.fn},
                      {"precision", f.scores.precision},
                      {"recall", f.scores.recall},
                      {"f1", f.scores.f1}});
  }
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, s] : report.per_class) classes[std::string(class_name(cls))] = scope_json(s);
  nlohmann::json keypoints = nlohmann::json::object();
  for (int k = 0; k < static_cast<int>(report.per_keypoint.size()); ++k)
    keypoints[keypoint_label(keypoint_from_channel(k))] = scope_json(report.per_keypoint[static_cast<std::size_t>(k)]);
  return {{"mean_f1", report.mean_f1},
          {"totals", {{"tp", report.totals.tp}, {"fp", report.totals.fp}, {"fn", report.totals.fn}}},
          {"per_frame", std::move(frames)},
          {"per_class", std::move(classes)},
          {"per_keypoint", std::move(keypoints)}};
}

std::string per_class_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "class,index,precision,recall,f1,total\n";
  for (const auto& [cls, s] : report.per_class) csv_row(out, class_name(cls), "", s);
  return out.str();
}

std::string per_keypoint_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "class,index,precision,recall,f1,total\n";
  for (int k = 0; k < static_cast<int>(report.per_keypoint.size()); ++k) {
    const auto id = keypoint_from_channel(k);
    csv_row(out, class_name(id.cls), std::to_string(id.index), report.per_keypoint[static_cast<std::size_t>(k)]);
  }
  return out.str();
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::ostringstream out;
  out << "x,mean_f1\n";
  for (const auto& p : curve) out << short_num(p.x) << ',' << fixed6(p.mean_f1) << '\n';
  return out.str();
}

}  // namespace poolkp
