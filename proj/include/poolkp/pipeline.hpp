#pragma once

#include <string>
#include <vector>

#include "poolkp/metrics.hpp"

namespace poolkp {

/// Pairs every <id>.json annotation in gt_dir with <id>.pkhv (decoded at
/// `beta`) or, failing that, an <id>.json detection file in pred_dir.
/// Frames are returned sorted by id; a missing prediction is an Io error.
std::vector<EvalFrame> load_eval_frames(const std::string& pred_dir, const std::string& gt_dir, double beta);

/// Like load_eval_frames but keeps the β-independent volume summaries; every
/// prediction must be a volume.
std::vector<SweepFrame> load_sweep_frames(const std::string& pred_dir, const std::string& gt_dir);

}  // namespace poolkp
