// poolkp command-line front end. Talks to the library only through poolkp.h.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poolkp/poolkp.h"

namespace {

namespace fs = std::filesystem;

constexpr int kUsageExit = 64;

struct Failure {
  poolkp_status status;
  std::string message;
};

// Throws on a non-OK status so each command reads linearly.
void check(poolkp_status s) {
  if (s != POOLKP_OK) throw Failure{s, poolkp_last_error()};
}

[[noreturn]] void fail(poolkp_status s, const std::string& message) { throw Failure{s, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ModelPtr = std::unique_ptr<poolkp_model, Deleter<poolkp_model, poolkp_model_free>>;
using VolumePtr = std::unique_ptr<poolkp_volume, Deleter<poolkp_volume, poolkp_volume_free>>;
using AnnotationPtr = std::unique_ptr<poolkp_annotation, Deleter<poolkp_annotation, poolkp_annotation_free>>;
using DetectionsPtr = std::unique_ptr<poolkp_detections, Deleter<poolkp_detections, poolkp_detections_free>>;
using ReportPtr = std::unique_ptr<poolkp_report, Deleter<poolkp_report, poolkp_report_free>>;
using CurvePtr = std::unique_ptr<poolkp_curve, Deleter<poolkp_curve, poolkp_curve_free>>;

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) fail(POOLKP_ERR_IO, "no such file '" + path + "'");
}

void require_dir(const std::string& path) {
  if (!fs::is_directory(path)) fail(POOLKP_ERR_IO, "no such directory '" + path + "'");
}

void require_range(bool ok, const std::string& what) {
  if (!ok) fail(POOLKP_ERR_INVALID_ARGUMENT, what);
}

std::vector<double> expand_grid(const std::string& spec) {
  std::size_t n = 0;
  check(poolkp_parse_grid(spec.c_str(), nullptr, 0, &n));
  std::vector<double> values(n);
  check(poolkp_parse_grid(spec.c_str(), values.data(), values.size(), &n));
  return values;
}

std::string sibling(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

const char* kSchemas = R"(File formats:
  model JSON       {config:{lanes,length_m,bumpers,bulkhead,lane_width_m,bumper_width_m,bulkhead_width_m},
                    entries:[{class,index,exists,kind,x_m?,y_m}]}
  volume (.pkhv)   "PKHV", u32 version=1, u32 M, u32 N, u32 C, C*M*N float32, little-endian,
                   channel-major, row-major within a channel
  annotation JSON  {frame_id,rows,cols,points:[{class,index,u,v}]}
  detection JSON   {frame_id,rows,cols,detections:[{class,index,u,v,entropy}]}
  homography JSON  {frame_id,h:[9],inliers,mean_residual_px,constraints:{point,line}}
  report CSV       class,index,precision,recall,f1,total
  curve CSV        x,mean_f1
  manifest JSON    {params,scenes:[{id,seed,annotation_path,volume_path,homography_path}]}
Classes: wall_left wall_right floating_left floating_right bulkhead_left bulkhead_right (0-12),
         wall_top wall_bottom (0-8). CVAT labels are "<class>_<index>".
POOL_THREADS caps the worker count (0 = all cores).)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool key-point model, heatmap decoding, evaluation and localization"};
  app.footer(kSchemas);
  app.require_subcommand(1);

  // model
  auto* model_cmd = app.add_subcommand("model", "Write the base pool model as JSON");
  int lanes = 8, length = 50;
  bool bumpers = false, bulkhead = false;
  double lane_width = 2.5, bumper_width = 0.25;
  std::string model_out;
  model_cmd->add_option("--lanes", lanes, "Number of lanes (6, 8, 10, 12, 16, 20)")->required();
  model_cmd->add_option("--length", length, "Pool length in meters (25 or 50)")->required();
  model_cmd->add_flag("--bumpers", bumpers, "Bumper lane-ropes along the side walls");
  model_cmd->add_flag("--bulkhead", bulkhead, "Pool is split by a bulkhead");
  model_cmd->add_option("--lane-width", lane_width, "Lane width in meters")->capture_default_str();
  model_cmd->add_option("--bumper-width", bumper_width, "Bumper width in meters")->capture_default_str();
  model_cmd->add_option("--out", model_out, "Output model JSON")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  std::string synth_model, synth_out, view = "partial";
  int count = 10, rows = 288, cols = 512;
  double loc_sigma = 0.0, dropout = 0.0, fp_rate = 0.0, peak_mass = 1.0, synth_scale = 20.0;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--model", synth_model, "Pool model JSON")->required();
  synth_cmd->add_option("--count", count, "Number of scenes")->capture_default_str();
  synth_cmd->add_option("--rows", rows, "Frame rows")->capture_default_str();
  synth_cmd->add_option("--cols", cols, "Frame columns")->capture_default_str();
  synth_cmd->add_option("--view", view, "full or partial")->check(CLI::IsMember({"full", "partial"}))->capture_default_str();
  synth_cmd->add_option("--loc-sigma", loc_sigma, "Peak jitter sigma in pixels")->capture_default_str();
  synth_cmd->add_option("--dropout", dropout, "Probability a visible key-point is flat")->capture_default_str();
  synth_cmd->add_option("--fp-rate", fp_rate, "Probability an absent key-point gets a spurious peak")->capture_default_str();
  synth_cmd->add_option("--peak-mass", peak_mass, "Probability mass of each peak, in (0, 1]")->capture_default_str();
  synth_cmd->add_option("--scale", synth_scale, "Base image pixels per meter")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Entropy-gated argmax decoding of a volume");
  std::string decode_volume, decode_out, frame_id;
  double decode_beta = 0.9;
  decode_cmd->add_option("--volume", decode_volume, "Volume file (.pkhv)")->required();
  decode_cmd->add_option("--beta", decode_beta, "Gate constant in [0, 1]")->capture_default_str();
  decode_cmd->add_option("--frame-id", frame_id, "Frame id (default: volume file name)");
  decode_cmd->add_option("--out", decode_out, "Output detection JSON")->required();

  // loss
  auto* loss_cmd = app.add_subcommand("loss", "Cross-entropy loss of a prediction against a target");
  std::string loss_pred, loss_target;
  loss_cmd->add_option("--pred", loss_pred, "Predicted volume (.pkhv)")->required();
  loss_cmd->add_option("--target", loss_target, "Target volume (.pkhv) or annotation (.json)")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Precision/recall/F1 over a directory of frames");
  std::string pred_dir, gt_dir, eval_out;
  double tolerance = 5.0, eval_beta = 0.9;
  bool per_class = false, per_keypoint = false;
  eval_cmd->add_option("--pred-dir", pred_dir, "Volumes (<id>.pkhv) or detections (<id>.json)")->required();
  eval_cmd->add_option("--gt-dir", gt_dir, "Annotations (<id>.json)")->required();
  eval_cmd->add_option("--tolerance", tolerance, "Pixel tolerance")->capture_default_str();
  eval_cmd->add_option("--beta", eval_beta, "Gate constant for volumes")->capture_default_str();
  eval_cmd->add_flag("--per-class", per_class, "Also write <out>.per_class.csv");
  eval_cmd->add_flag("--per-keypoint", per_keypoint, "Also write <out>.per_keypoint.csv");
  eval_cmd->add_option("--out", eval_out, "Output report JSON")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Mean F1 as a function of beta or tolerance");
  std::string mode, grid, sweep_out, sweep_pred, sweep_gt;
  double sweep_tolerance = 5.0;
  double sweep_beta = -1.0;
  int sweep_lanes = 0;
  sweep_cmd->add_option("--mode", mode, "beta or tolerance")->check(CLI::IsMember({"beta", "tolerance"}))->required();
  sweep_cmd->add_option("--grid", grid, "a:b:step, inclusive")->required();
  sweep_cmd->add_option("--pred-dir", sweep_pred, "Volumes (<id>.pkhv)")->required();
  sweep_cmd->add_option("--gt-dir", sweep_gt, "Annotations (<id>.json)")->required();
  sweep_cmd->add_option("--tolerance", sweep_tolerance, "Pixel tolerance for beta sweeps")->capture_default_str();
  sweep_cmd->add_option("--beta", sweep_beta, "Gate constant for tolerance sweeps");
  sweep_cmd->add_option("--lanes", sweep_lanes, "Use the reference beta of this pool type for tolerance sweeps");
  sweep_cmd->add_option("--out", sweep_out, "Output CSV (x,mean_f1)")->required();

  // localize
  auto* loc_cmd = app.add_subcommand("localize", "Estimate the frame-to-base homography from detections");
  std::string loc_det, loc_model, loc_out;
  double loc_scale = 20.0, loc_threshold = 3.0;
  int iters = 1000;
  std::uint64_t loc_seed = 0;
  loc_cmd->add_option("--detections", loc_det, "Detection JSON")->required();
  loc_cmd->add_option("--model", loc_model, "Pool model JSON")->required();
  loc_cmd->add_option("--scale", loc_scale, "Base image pixels per meter")->capture_default_str();
  loc_cmd->add_option("--iters", iters, "RANSAC iterations")->capture_default_str();
  loc_cmd->add_option("--threshold", loc_threshold, "Inlier threshold in base pixels")->capture_default_str();
  loc_cmd->add_option("--seed", loc_seed, "RANSAC seed")->capture_default_str();
  loc_cmd->add_option("--out", loc_out, "Output homography JSON")->required();

  // import-cvat
  auto* cvat_cmd = app.add_subcommand("import-cvat", "Convert a CVAT XML export into annotation JSON files");
  std::string xml, cvat_out;
  double factor = 1.0;
  cvat_cmd->add_option("--xml", xml, "CVAT for images XML")->required();
  cvat_cmd->add_option("--scale-factor", factor, "Divide coordinates by this factor (3.75 maps 1080x1920 to 288x512)")
      ->capture_default_str();
  cvat_cmd->add_option("--out-dir", cvat_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error:usage: %s\n", e.what());
    return kUsageExit;
  }

  try {
    if (*model_cmd) {
      poolkp_pool_config c;
      poolkp_pool_config_default(&c);
      c.lanes = lanes;
      c.length_m = length;
      c.bumpers = bumpers;
      c.bulkhead = bulkhead;
      c.lane_width_m = lane_width;
      c.bumper_width_m = bumper_width;
      poolkp_model* raw = nullptr;
      check(poolkp_model_create(&c, &raw));
      ModelPtr model(raw);
      check(poolkp_model_save(model.get(), model_out.c_str()));
    } else if (*synth_cmd) {
      require_file(synth_model);
      require_range(count >= 0, "--count must be >= 0");
      require_range(rows >= 2 && cols >= 2, "--rows and --cols must be >= 2");
      require_range(loc_sigma >= 0.0, "--loc-sigma must be >= 0");
      require_range(dropout >= 0.0 && dropout <= 1.0, "--dropout must lie in [0, 1]");
      require_range(fp_rate >= 0.0 && fp_rate <= 1.0, "--fp-rate must lie in [0, 1]");
      require_range(peak_mass > 0.0 && peak_mass <= 1.0, "--peak-mass must lie in (0, 1]");
      require_range(synth_scale > 0.0, "--scale must be positive");
      poolkp_model* raw = nullptr;
      check(poolkp_model_load(synth_model.c_str(), &raw));
      ModelPtr model(raw);
      poolkp_synth_params p;
      poolkp_synth_params_default(&p);
      p.frame_rows = rows;
      p.frame_cols = cols;
      p.partial_view = view == "partial";
      p.loc_sigma_px = loc_sigma;
      p.dropout_rate = dropout;
      p.false_positive_rate = fp_rate;
      p.peak_mass = peak_mass;
      p.scale_px_per_m = synth_scale;
      p.seed = synth_seed;
      check(poolkp_synth_generate(model.get(), &p, count, synth_out.c_str()));
    } else if (*decode_cmd) {
      require_file(decode_volume);
      require_range(decode_beta >= 0.0 && decode_beta <= 1.0, "--beta must lie in [0, 1]");
      poolkp_volume* raw = nullptr;
      check(poolkp_volume_read(decode_volume.c_str(), &raw, nullptr));
      VolumePtr volume(raw);
      check(poolkp_volume_validate(volume.get()));
      const std::string id = frame_id.empty() ? fs::path(decode_volume).stem().string() : frame_id;
      poolkp_detections* det = nullptr;
      check(poolkp_decode(volume.get(), decode_beta, id.c_str(), &det));
      DetectionsPtr detections(det);
      check(poolkp_detections_save(detections.get(), decode_out.c_str()));
    } else if (*loss_cmd) {
      require_file(loss_pred);
      require_file(loss_target);
      poolkp_volume* raw = nullptr;
      check(poolkp_volume_read(loss_pred.c_str(), &raw, nullptr));
      VolumePtr pred(raw);
      VolumePtr target;
      if (fs::path(loss_target).extension() == ".json") {
        poolkp_annotation* ann = nullptr;
        check(poolkp_annotation_load(loss_target.c_str(), &ann));
        AnnotationPtr annotation(ann);
        int r = 0, c = 0;
        check(poolkp_volume_dims(pred.get(), &r, &c, nullptr));
        check(poolkp_target_volume(annotation.get(), r, c, &raw));
      } else {
        check(poolkp_volume_read(loss_target.c_str(), &raw, nullptr));
      }
      target.reset(raw);
      double loss = 0.0;
      check(poolkp_cross_entropy(target.get(), pred.get(), &loss));
      std::printf("%.17g\n", loss);
    } else if (*eval_cmd) {
      require_dir(pred_dir);
      require_dir(gt_dir);
      require_range(tolerance > 0.0, "--tolerance must be positive");
      require_range(eval_beta >= 0.0 && eval_beta <= 1.0, "--beta must lie in [0, 1]");
      poolkp_report* raw = nullptr;
      check(poolkp_evaluate_dirs(pred_dir.c_str(), gt_dir.c_str(), tolerance, eval_beta, &raw));
      ReportPtr report(raw);
      check(poolkp_report_save_json(report.get(), eval_out.c_str()));
      if (per_class) check(poolkp_report_save_class_csv(report.get(), sibling(eval_out, ".per_class.csv").c_str()));
      if (per_keypoint) check(poolkp_report_save_keypoint_csv(report.get(), sibling(eval_out, ".per_keypoint.csv").c_str()));
      double mean_f1 = 0.0;
      std::size_t frames = 0;
      check(poolkp_report_mean_f1(report.get(), &mean_f1));
      check(poolkp_report_frame_count(report.get(), &frames));
      std::printf("frames=%zu mean_f1=%.6f\n", frames, mean_f1);
    } else if (*sweep_cmd) {
      require_dir(sweep_pred);
      require_dir(sweep_gt);
      const auto values = expand_grid(grid);
      poolkp_curve* raw = nullptr;
      if (mode == "beta") {
        require_range(sweep_tolerance > 0.0, "--tolerance must be positive");
        for (double b : values) require_range(b >= 0.0 && b <= 1.0, "beta grid values must lie in [0, 1]");
        check(poolkp_sweep_beta_dirs(sweep_pred.c_str(), sweep_gt.c_str(), sweep_tolerance, values.data(), values.size(), &raw));
      } else {
        double beta = sweep_beta;
        if (sweep_lanes != 0) check(poolkp_optimal_beta(sweep_lanes, &beta));
        require_range(beta >= 0.0 && beta <= 1.0, "tolerance sweeps need --beta in [0, 1] or --lanes");
        for (double t : values) require_range(t > 0.0, "tolerance grid values must be positive");
        check(poolkp_sweep_tolerance_dirs(sweep_pred.c_str(), sweep_gt.c_str(), beta, values.data(), values.size(), &raw));
      }
      CurvePtr curve(raw);
      check(poolkp_curve_save_csv(curve.get(), sweep_out.c_str()));
    } else if (*loc_cmd) {
      require_file(loc_det);
      require_file(loc_model);
      require_range(loc_scale > 0.0, "--scale must be positive");
      require_range(iters >= 1, "--iters must be >= 1");
      require_range(loc_threshold > 0.0, "--threshold must be positive");
      poolkp_detections* det = nullptr;
      check(poolkp_detections_load(loc_det.c_str(), &det));
      DetectionsPtr detections(det);
      poolkp_model* raw = nullptr;
      check(poolkp_model_load(loc_model.c_str(), &raw));
      ModelPtr model(raw);
      poolkp_ransac_params params{iters, loc_threshold, loc_seed};
      poolkp_localization loc{};
      check(poolkp_localize(detections.get(), model.get(), loc_scale, &params, &loc));
      const char* id = nullptr;
      check(poolkp_detections_frame_id(detections.get(), &id));
      check(poolkp_localization_save(&loc, id, loc_out.c_str()));
      std::printf("inliers=%d mean_residual_px=%.6g points=%d lines=%d\n", loc.inliers, loc.mean_residual_px, loc.point_constraints,
                  loc.line_constraints);
    } else if (*cvat_cmd) {
      require_file(xml);
      require_range(factor > 0.0, "--scale-factor must be positive");
      std::size_t frames = 0;
      check(poolkp_import_cvat(xml.c_str(), factor, cvat_out.c_str(), &frames));
      std::printf("frames=%zu\n", frames);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error:%s: %s\n", poolkp_status_name(f.status), f.message.c_str());
    return f.status == POOLKP_ERR_INTERNAL ? 70 : static_cast<int>(f.status);
  }
  return 0;
}
