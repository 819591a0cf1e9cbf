#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "poolkp/error.hpp"
#include "poolkp/metrics.hpp"
#include "test_util.hpp"

using namespace poolkp;

namespace {

const KeyPointId kA{KeyPointClass::WallLeft, 0};
const KeyPointId kB{KeyPointClass::WallLeft, 5};
const KeyPointId kC{KeyPointClass::WallTop, 3};

DetectionSet dets(std::vector<Detection> d, std::string id = "f") { return {std::move(id), 50, 60, std::move(d)}; }
FrameAnnotation gt(std::vector<AnnotatedPoint> p, std::string id = "f") { return {std::move(id), 50, 60, std::move(p)}; }

// Perfect volume for an annotation: delta where annotated, flat elsewhere.
SweepFrame perfect_frame(const FrameAnnotation& ann) {
  return {summarize(make_target_volume(ann, ann.rows, ann.cols), ann.frame_id), ann};
}

}  // namespace

TEST_CASE("scores") {
  CHECK(precision({2, 1, 1}) == doctest::Approx(2.0 / 3));
  CHECK(recall({2, 1, 1}) == doctest::Approx(2.0 / 3));
  CHECK(f1(MatchCounts{2, 1, 1}) == doctest::Approx(2.0 / 3));
  CHECK(precision({}) == 0.0);
  CHECK(recall({}) == 0.0);
  CHECK(f1(MatchCounts{}) == 0.0);
  CHECK(f1(0.0, 0.0) == 0.0);
  CHECK(std::abs(f1(0.7756, 0.8941) - 0.8307) < 5e-4);
  CHECK(std::abs(f1(0.7105, 0.7892) - 0.7478) < 5e-4);
  CHECK(std::abs(f1(0.8235, 0.8435) - 0.8333) < 5e-4);
}

TEST_CASE("harmonic mean bounds") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> n(0, 40);
  for (int i = 0; i < 2000; ++i) {
    const MatchCounts c{n(rng), n(rng), n(rng)};
    if (c.tp == 0) continue;
    const double p = precision(c), r = recall(c), f = f1(c);
    CHECK(f >= std::min(p, r) - 1e-15);
    CHECK(f <= std::max(p, r) + 1e-15);
  }
}

TEST_CASE("match frame") {
  SUBCASE("distance on the tolerance boundary is a hit") {
    const auto m = match_frame(dets({{kA, 10, 10, 0}}), gt({{kA, 13, 14}}), {5.0});
    CHECK(m.counts == MatchCounts{1, 0, 0});
    CHECK(m.outcomes[0] == ChannelOutcome::TruePositive);
  }
  SUBCASE("detection without ground truth") {
    CHECK(match_frame(dets({{kA, 10, 10, 0}}), gt({}), {5.0}).counts == MatchCounts{0, 1, 0});
  }
  SUBCASE("ground truth without detection") {
    CHECK(match_frame(dets({}), gt({{kA, 10, 10}}), {5.0}).counts == MatchCounts{0, 0, 1});
  }
  SUBCASE("mislocalized detection counts both ways") {
    const auto m = match_frame(dets({{kA, 10, 10, 0}}), gt({{kA, 16, 10}}), {5.0});
    CHECK(m.counts == MatchCounts{0, 1, 1});
    CHECK(m.outcomes[0] == ChannelOutcome::Mislocalized);
  }
  SUBCASE("same position on another channel does not match") {
    CHECK(match_frame(dets({{kB, 10, 10, 0}}), gt({{kA, 10, 10}}), {5.0}).counts == MatchCounts{0, 1, 1});
  }
  CHECK(error_kind_of([] {
          match_frame({"f", 10, 10, {}}, gt({}), {5.0});
        }) == ErrorKind::Shape);
}

TEST_CASE("tp + fn conserves ground truth and f1 grows with tolerance") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(0.0, 49.0), jitter(-8.0, 8.0), coin(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    FrameAnnotation g = gt({});
    DetectionSet d = dets({});
    for (int ch = 0; ch < 96; ++ch) {
      const auto id = keypoint_from_channel(ch);
      const bool has_gt = coin(rng) < 0.4;
      const bool has_det = coin(rng) < 0.5;
      const double u = pos(rng), v = pos(rng);
      if (has_gt) g.points.push_back({id, u, v});
      if (has_det) d.detections.push_back({id, std::clamp(u + jitter(rng), 0.0, 59.0), std::clamp(v + jitter(rng), 0.0, 49.0), 0.1});
    }
    double prev = -1.0;
    for (double tol : {0.5, 1.0, 2.0, 4.0, 8.0, 100.0}) {
      const auto m = match_frame(d, g, {tol});
      CHECK(m.counts.tp + m.counts.fn == static_cast<long>(g.points.size()));
      CHECK(m.counts.tp + m.counts.fp == static_cast<long>(d.detections.size()));
      const double f = f1(m.counts);
      CHECK(f >= prev);
      prev = f;
    }
  }
}

TEST_CASE("evaluate") {
  SUBCASE("mean over frames") {
    const std::vector<EvalFrame> frames{{dets({{kA, 1, 1, 0}}, "a"), gt({{kA, 1, 1}}, "a")},
                                        {dets({{kA, 1, 1, 0}}, "b"), gt({{kB, 1, 1}}, "b")}};
    const auto r = evaluate(frames, {5.0});
    CHECK(r.mean_f1 == doctest::Approx(0.5));
    REQUIRE(r.per_frame.size() == 2);
    CHECK(r.per_frame[0].scores.f1 == 1.0);
    CHECK(r.per_frame[1].scores.f1 == 0.0);
  }
  SUBCASE("empty frame follows the 0/0 convention") {
    HeatmapVolume v(4, 4);
    for (int k = 0; k < 96; ++k) std::ranges::fill(v.channel(k), 1.0 / 16);
    const std::vector<EvalFrame> frames{{decode(v, {0.0}, "z"), {"z", 4, 4, {}}}};
    const auto r = evaluate(frames, {5.0});
    CHECK(r.mean_f1 == 0.0);
    CHECK(r.totals == MatchCounts{});
    for (const auto& [cls, s] : r.per_class) CHECK_FALSE(s.scores);
  }
  SUBCASE("planted per-class counts") {
    const std::vector<EvalFrame> frames{
        {dets({{kA, 5, 5, 0}, {kB, 7, 7, 0}, {kC, 30, 30, 0}}, "a"), gt({{kA, 6, 6}, {kC, 40, 30}}, "a")},
        {dets({{kB, 20, 20, 0}}, "b"), gt({{kA, 3, 3}, {kB, 21, 20}, {kC, 10, 10}}, "b")},
    };
    const auto r = evaluate(frames, {5.0});
    // WallLeft: tp = kA@a + kB@b = 2, fp = kB@a = 1, fn = kA@b = 1
    const auto& wl = r.per_class.at(KeyPointClass::WallLeft);
    CHECK(wl.counts == MatchCounts{2, 1, 1});
    REQUIRE(wl.scores);
    CHECK(std::abs(wl.scores->precision - 2.0 / 3) < 1e-12);
    CHECK(std::abs(wl.scores->recall - 2.0 / 3) < 1e-12);
    CHECK(std::abs(wl.scores->f1 - 2.0 / 3) < 1e-12);
    CHECK(wl.total == 3);
    // WallTop: mislocalized at a (fp + fn), missed at b (fn)
    const auto& wt = r.per_class.at(KeyPointClass::WallTop);
    CHECK(wt.counts == MatchCounts{0, 1, 2});
    REQUIRE(wt.scores);
    CHECK(wt.scores->f1 == 0.0);
    CHECK_FALSE(r.per_class.at(KeyPointClass::FloatingLeft).scores);
    // per key-point
    CHECK(r.per_keypoint[canonical_channel_index(kB)].counts == MatchCounts{1, 1, 0});
    CHECK(r.per_keypoint[canonical_channel_index(kA)].total == 2);
    // frame a: tp 1, fp 2, fn 1 -> f1 = 0.4; frame b: tp 1, fp 0, fn 2 -> f1 = 0.5
    CHECK(r.mean_f1 == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(r.totals == MatchCounts{2, 2, 3});
  }
  SUBCASE("order independent and strict about ids") {
    std::vector<EvalFrame> frames{{dets({{kA, 5, 5, 0}}, "a"), gt({{kA, 6, 6}}, "a")}, {dets({}, "b"), gt({{kB, 2, 2}}, "b")}};
    const auto r1 = evaluate(frames, {5.0});
    std::reverse(frames.begin(), frames.end());
    const auto r2 = evaluate(frames, {5.0});
    CHECK(to_json(r1) == to_json(r2));
    frames[0].detections.frame_id = "q";
    CHECK(error_kind_of([&] { evaluate(frames, {5.0}); }) == ErrorKind::Input);
    frames[0].detections.frame_id = "a";
    frames[0].ground_truth.frame_id = "a";
    CHECK(error_kind_of([&] { evaluate(frames, {5.0}); }) == ErrorKind::Input);
  }
}

TEST_CASE("beta sweep on perfect volumes") {
  std::vector<SweepFrame> frames;
  frames.push_back(perfect_frame(gt({{kA, 5, 5}, {kC, 30, 20}}, "a")));
  frames.push_back(perfect_frame(gt({{kB, 59, 49}}, "b")));
  const auto betas = parse_grid("0:1:0.05");
  const auto curve = beta_sweep(frames, betas, 5.0);
  REQUIRE(curve.size() == 21);
  CHECK(curve.front().mean_f1 == 0.0);
  CHECK(curve.front().detections == 0);
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) CHECK(curve[i].mean_f1 == 1.0);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].detections >= curve[i - 1].detections);
}

TEST_CASE("tolerance sweep") {
  // one detection planted exactly 5 px off
  FrameAnnotation g = gt({{kA, 10, 10}, {kB, 30, 30}}, "a");
  HeatmapVolume v = make_target_volume(g, 50, 60);
  auto ch = v.channel(canonical_channel_index(kA));
  std::ranges::fill(ch, 0.0);
  ch[10 * 60 + 15] = 1.0;
  const std::vector<SweepFrame> frames{{summarize(v, "a"), g}};
  const std::vector<double> beta{0.9};
  const auto curve = tolerance_sweep(frames, beta, std::vector<double>{4.9, 5.0, 1e9});
  // below 5 px the planted detection is one fp and one fn: p = r = 1/2
  CHECK(curve[0].mean_f1 == doctest::Approx(0.5));
  CHECK(curve[1].mean_f1 == 1.0);
  CHECK(curve[2].mean_f1 == 1.0);
  CHECK(error_kind_of([&] { tolerance_sweep(frames, std::vector<double>{0.9, 0.9}, std::vector<double>{5.0}); }) == ErrorKind::Input);
}

TEST_CASE("optimal beta per pool type") {
  CHECK(optimal_beta_for_lanes(6) == 0.15);
  CHECK(optimal_beta_for_lanes(8) == 0.9);
  CHECK(optimal_beta_for_lanes(10) == 0.7);
  CHECK(optimal_beta_for_lanes(12) == 0.15);
  CHECK(optimal_beta_for_lanes(16) == 0.9);
  CHECK(optimal_beta_for_lanes(20) == 0.7);
  CHECK(error_kind_of([] { optimal_beta_for_lanes(7); }) == ErrorKind::Input);
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("0:1:0.05").size() == 21);
  CHECK(parse_grid("0:1:0.05").back() == doctest::Approx(1.0));
  CHECK(parse_grid("1:10:1").size() == 10);
  CHECK(parse_grid("2:2:1") == std::vector<double>{2.0});
  CHECK(parse_grid("0:1:0.3").size() == 4);
  for (const char* bad : {"0:1", "a:b:c", "1:0:0.1", "0:1:0", "0:1:-1", "0:1:0.1:2"})
    CHECK(error_kind_of([&] { parse_grid(bad); }) == ErrorKind::Input);
}

TEST_CASE("csv output") {
  const std::vector<EvalFrame> frames{{dets({{kA, 5, 5, 0}}, "a"), gt({{kA, 6, 6}}, "a")}};
  const auto r = evaluate(frames, {5.0});
  const auto cls = per_class_csv(r);
  CHECK(cls.rfind("class,index,precision,recall,f1,total\n", 0) == 0);
  CHECK(cls.find("wall_left,,1.000000,1.000000,1.000000,1\n") != std::string::npos);
  CHECK(cls.find("wall_top,,-,-,-,0\n") != std::string::npos);
  const auto kp = per_keypoint_csv(r);
  CHECK(std::count(kp.begin(), kp.end(), '\n') == 97);
  const std::vector<CurvePoint> curve{{0.0, 0.0, 0}, {0.5, 0.25, 3}};
  CHECK(curve_csv(curve) == "x,mean_f1\n0,0.000000\n0.5,0.250000\n");
}
