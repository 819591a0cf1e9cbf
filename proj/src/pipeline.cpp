#include "poolkp/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "parallel.hpp"
#include "poolkp/annotation_io.hpp"
#include "poolkp/error.hpp"

namespace poolkp {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> annotation_ids(const std::string& gt_dir) {
  std::error_code ec;
  if (!fs::is_directory(gt_dir, ec)) throw Error(ErrorKind::Io, "ground-truth directory '" + gt_dir + "' does not exist");
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(gt_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::ranges::sort(ids);
  return ids;
}

void require_dir(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, "prediction directory '" + dir + "' does not exist");
}

HeatmapVolume read_checked_volume(const fs::path& path) {
  auto r = read_volume(path.string());
  validate_distributions(r.volume);
  return std::move(r.volume);
}

}  // namespace

std::vector<EvalFrame> load_eval_frames(const std::string& pred_dir, const std::string& gt_dir, double beta) {
  require_dir(pred_dir);
  const auto ids = annotation_ids(gt_dir);
  std::vector<EvalFrame> frames(ids.size());
  detail::parallel_for(ids.size(), [&](std::size_t i) {
    const std::string& id = ids[i];
    EvalFrame& f = frames[i];
    f.ground_truth = load_annotation((fs::path(gt_dir) / (id + ".json")).string());
    f.ground_truth.frame_id = id;
    const fs::path volume = fs::path(pred_dir) / (id + ".pkhv");
    const fs::path detections = fs::path(pred_dir) / (id + ".json");
    if (fs::exists(volume)) {
      f.detections = decode(read_checked_volume(volume), {beta}, id);
    } else if (fs::exists(detections)) {
      f.detections = load_detections(detections.string());
      f.detections.frame_id = id;
    } else {
      throw Error(ErrorKind::Io, "no prediction for frame '" + id + "' in '" + pred_dir + "'");
    }
  });
  return frames;
}

std::vector<SweepFrame> load_sweep_frames(const std::string& pred_dir, const std::string& gt_dir) {
  require_dir(pred_dir);
  const auto ids = annotation_ids(gt_dir);
  std::vector<SweepFrame> frames(ids.size());
  detail::parallel_for(ids.size(), [&](std::size_t i) {
    const std::string& id = ids[i];
    SweepFrame& f = frames[i];
    f.ground_truth = load_annotation((fs::path(gt_dir) / (id + ".json")).string());
    f.ground_truth.frame_id = id;
    const fs::path volume = fs::path(pred_dir) / (id + ".pkhv");
    if (!fs::exists(volume)) throw Error(ErrorKind::Io, "no volume for frame '" + id + "' in '" + pred_dir + "'");
    f.summary = summarize(read_checked_volume(volume), id);
  });
  return frames;
}

}  // namespace poolkp
