#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolkp/heatmap.hpp"

namespace poolkp {

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

// 0/0 is scored as 0 throughout.
double precision(const MatchCounts& c);
double recall(const MatchCounts& c);
double f1(const MatchCounts& c);
/// Harmonic mean of precision and recall; 0 when both are 0.
double f1(double precision, double recall);

struct EvalParams {
  double tolerance_px = 5.0;
  double beta = 0.9;
};

enum class ChannelOutcome {
  None,             // neither detection nor ground truth
  TruePositive,
  FalsePositive,    // detection without ground truth
  Mislocalized,     // detection beyond tolerance: one fp and one fn
  FalseNegative,    // ground truth without detection
};

struct FrameMatch {
  std::vector<ChannelOutcome> outcomes;  // one per canonical channel
  MatchCounts counts;
};

MatchCounts counts_of(ChannelOutcome outcome);

/// Channel-wise matching at the shared resolution of `det` and `gt`.
FrameMatch match_frame(const DetectionSet& det, const FrameAnnotation& gt, const EvalParams& params);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Scores scores_of(const MatchCounts& c);

struct FrameScore {
  std::string frame_id;
  MatchCounts counts;
  Scores scores;
};

/// One row of a per-class or per-key-point table. `scores` is empty when the
/// scope had neither ground truth nor false positives (printed as "-").
struct ScopeScore {
  MatchCounts counts;
  std::optional<Scores> scores;
  long total = 0;  // tp + fn
};

struct EvalReport {
  std::vector<FrameScore> per_frame;  // sorted by frame id
  std::map<KeyPointClass, ScopeScore> per_class;
  std::vector<ScopeScore> per_keypoint;  // indexed by canonical channel
  double mean_f1 = 0.0;
  MatchCounts totals;
};

struct EvalFrame {
  DetectionSet detections;
  FrameAnnotation ground_truth;
};

EvalReport evaluate(std::span<const EvalFrame> frames, const EvalParams& params);

struct CurvePoint {
  double x = 0.0;
  double mean_f1 = 0.0;
  long detections = 0;
};

/// A decoded-once view of one frame used by the sweeps.
struct SweepFrame {
  VolumeSummary summary;
  FrameAnnotation ground_truth;
};

std::vector<CurvePoint> beta_sweep(std::span<const SweepFrame> frames, std::span<const double> betas, double tolerance_px);

/// `betas` holds one value per frame, or a single value shared by all frames.
std::vector<CurvePoint> tolerance_sweep(std::span<const SweepFrame> frames, std::span<const double> betas,
                                        std::span<const double> tolerances);

/// Best-performing β by pool type: 0.15, 0.9 and 0.7 for six, eight and ten
/// lanes per section (12, 16 and 20 lane bulkhead pools fall in the same groups).
double optimal_beta_for_lanes(int lanes);

/// "a:b:step", inclusive of b when step divides the range.
std::vector<double> parse_grid(const std::string& spec);

nlohmann::json to_json(const EvalReport& report);
/// class,index,precision,recall,f1,total. Per-class rows carry an empty index;
/// absent scopes print "-".
std::string per_class_csv(const EvalReport& report);
std::string per_keypoint_csv(const EvalReport& report);
std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace poolkp
