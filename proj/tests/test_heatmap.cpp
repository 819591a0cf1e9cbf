#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "poolkp/error.hpp"
#include "poolkp/heatmap.hpp"
#include "test_util.hpp"

using namespace poolkp;

namespace {

// Direct double sum with the same clamp, written independently of the library.
double brute_force_loss(const HeatmapVolume& t, const HeatmapVolume& p) {
  double total = 0.0;
  for (int k = 0; k < t.channels(); ++k)
    for (int r = 0; r < t.rows(); ++r)
      for (int c = 0; c < t.cols(); ++c) {
        const double y = t.at(k, r, c);
        if (y != 0.0) total -= y * std::log(std::max(p.at(k, r, c), 1e-12));
      }
  return total;
}

double brute_force_entropy(const HeatmapVolume& v) {
  double h = 0.0;
  for (int k = 0; k < v.channels(); ++k)
    for (int r = 0; r < v.rows(); ++r)
      for (int c = 0; c < v.cols(); ++c) {
        const double y = v.at(k, r, c);
        if (y > 0.0) h -= y * std::log(y);
      }
  return h;
}

HeatmapVolume random_distribution(int rows, int cols, int channels, std::mt19937_64& rng, double sharpness) {
  std::normal_distribution<double> g(0.0, sharpness);
  std::vector<double> logits(static_cast<std::size_t>(rows) * cols * channels);
  for (auto& x : logits) x = g(rng);
  return softmax_normalize(rows, cols, channels, logits);
}

HeatmapVolume random_delta(int rows, int cols, int channels, std::mt19937_64& rng) {
  HeatmapVolume v(rows, cols, channels);
  std::uniform_int_distribution<int> cell(0, rows * cols - 1);
  for (int k = 0; k < channels; ++k) v.channel(k)[cell(rng)] = 1.0;
  return v;
}

FrameAnnotation one_point(int rows, int cols, KeyPointId id, double u, double v) {
  return {"f", rows, cols, {{id, u, v}}};
}

}  // namespace

TEST_CASE("target volume delta and flat") {
  const KeyPointId id{KeyPointClass::WallRight, 3};
  const auto t = make_target_volume(one_point(2, 2, id, 0.0, 0.0), 2, 2);
  CHECK(t.channels() == 96);
  const int k = canonical_channel_index(id);
  for (int ch = 0; ch < 96; ++ch) {
    const auto c = t.channel(ch);
    if (ch == k) {
      CHECK(c[0] == 1.0);
      CHECK(c[1] == 0.0);
      CHECK(c[2] == 0.0);
      CHECK(c[3] == 0.0);
    } else {
      for (double x : c) CHECK(x == 0.25);
    }
  }
  const auto empty = make_target_volume({"e", 3, 5, {}}, 3, 5);
  for (double x : empty.data()) CHECK(x == doctest::Approx(1.0 / 15));
}

TEST_CASE("target volume rounding and rescale") {
  const KeyPointId id{KeyPointClass::WallTop, 2};
  const int k = canonical_channel_index(id);
  auto cell_of = [&](const HeatmapVolume& v) {
    const auto c = v.channel(k);
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] == 1.0) return static_cast<int>(i);
    return -1;
  };
  // half-up rounding
  CHECK(cell_of(make_target_volume(one_point(4, 4, id, 1.5, 0.49), 4, 4)) == 2);
  CHECK(cell_of(make_target_volume(one_point(4, 4, id, 1.49, 1.5), 4, 4)) == 9);
  // rounding past the last cell stays on the grid
  CHECK(cell_of(make_target_volume(one_point(4, 4, id, 3.7, 3.9), 4, 4)) == 15);
  // 1080x1920 annotation onto a 288x512 grid: coordinates divide by 3.75
  CHECK(cell_of(make_target_volume(one_point(1080, 1920, id, 375.0, 751.0), 288, 512)) == 200 * 512 + 100);
  CHECK(error_kind_of([&] { make_target_volume(one_point(1080, 1920, id, 1.0, 1.0), 288, 500); }) == ErrorKind::Shape);
  CHECK(error_kind_of([&] { make_target_volume(one_point(4, 4, id, 4.0, 0.0), 4, 4); }) == ErrorKind::OutOfBounds);
}

TEST_CASE("softmax") {
  const std::vector<double> zeros(4, 0.0);
  const auto u = softmax_normalize(2, 2, 1, zeros);
  for (double x : u.data()) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));

  const std::vector<double> l{std::log(2.0), 0.0, 0.0, 0.0};
  const auto s = softmax_normalize(2, 2, 1, l);
  CHECK(s.data()[0] == doctest::Approx(0.4).epsilon(1e-15));
  for (int i = 1; i < 4; ++i) CHECK(s.data()[i] == doctest::Approx(0.2).epsilon(1e-15));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 30.0);
  std::vector<double> big(3 * 5 * 6);
  for (auto& x : big) x = g(rng);
  const auto v = softmax_normalize(5, 6, 3, big);
  CHECK_NOTHROW(validate_distributions(v));
  auto shifted = big;
  for (std::size_t i = 0; i < 30; ++i) shifted[i] += 1000.0;
  const auto w = softmax_normalize(5, 6, 3, shifted);
  for (std::size_t i = 0; i < v.data().size(); ++i) CHECK(std::abs(v.data()[i] - w.data()[i]) < 1e-9);

  big[3] = std::nan("");
  CHECK(error_kind_of([&] { softmax_normalize(5, 6, 3, big); }) == ErrorKind::Numeric);
  CHECK(error_kind_of([&] { softmax_normalize(5, 6, 2, big); }) == ErrorKind::Shape);
}

TEST_CASE("channel entropy") {
  const std::vector<double> delta{0, 1, 0, 0};
  CHECK(channel_entropy(delta) == 0.0);
  const std::vector<double> half{0.5, 0.5, 0, 0};
  CHECK(channel_entropy(half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (int cells : {4, 15, 288 * 512}) {
    const std::vector<double> flat(cells, 1.0 / cells);
    CHECK(std::abs(channel_entropy(flat) - std::log(double(cells))) < 1e-9);
  }
}

TEST_CASE("cross entropy") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = trial % 2 ? random_delta(4, 4, 3, rng) : random_distribution(4, 4, 3, rng, 1.0);
    const auto p = random_distribution(4, 4, 3, rng, 1.0 + trial % 5);
    const double loss = cross_entropy_loss(t, p);
    CHECK(std::abs(loss - brute_force_loss(t, p)) < 1e-9);
    CHECK(loss >= brute_force_entropy(t) - 1e-9);
    const auto d = random_delta(4, 4, 3, rng);
    CHECK(cross_entropy_loss(d, d) <= 1e-9);
  }
  // delta target against flat prediction: ln 4 for the one channel
  HeatmapVolume t(2, 2, 1), p(2, 2, 1);
  t.channel(0)[2] = 1.0;
  std::ranges::fill(p.channel(0), 0.25);
  CHECK(cross_entropy_loss(t, p) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  // zero prediction at the target cell is clamped, not infinite
  HeatmapVolume z(2, 2, 1);
  z.channel(0)[0] = 1.0;
  CHECK(cross_entropy_loss(t, z) == doctest::Approx(-std::log(1e-12)));
  CHECK(error_kind_of([&] { cross_entropy_loss(t, HeatmapVolume(2, 3, 1)); }) == ErrorKind::Shape);
}

TEST_CASE("decode gate") {
  HeatmapVolume v(2, 2);
  for (int k = 0; k < 96; ++k) std::ranges::fill(v.channel(k), 0.25);
  const int k = 17;
  std::ranges::fill(v.channel(k), 0.0);
  v.channel(k)[2] = 1.0;  // row 1, col 0

  const auto d = decode(v, {0.9}, "x");
  REQUIRE(d.detections.size() == 1);
  CHECK(d.detections[0].id == keypoint_from_channel(k));
  CHECK(d.detections[0].u == 0.0);
  CHECK(d.detections[0].v == 1.0);
  CHECK(d.detections[0].entropy == 0.0);
  CHECK(d.frame_id == "x");
  CHECK(decode(v, {1e-9}).detections.size() == 1);
  CHECK(decode(v, {0.0}).detections.empty());
  // the flat channel sits exactly at ln 4 and never passes
  CHECK(decode(v, {1.0}).detections.size() == 1);
}

TEST_CASE("argmax ties go to the first row-major cell") {
  HeatmapVolume v(3, 3);
  for (int k = 0; k < 96; ++k) std::ranges::fill(v.channel(k), 1.0 / 9);
  auto c = v.channel(0);
  std::ranges::fill(c, 0.0);
  c[5] = 0.5;
  c[7] = 0.5;
  const auto d = decode(v, {0.9});
  REQUIRE(d.detections.size() == 1);
  CHECK(d.detections[0].u == 2.0);
  CHECK(d.detections[0].v == 1.0);
}

TEST_CASE("gate nesting over random volumes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> sharp(0.1, 6.0);
  const std::vector<double> betas{0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_distribution(4, 5, 96, rng, sharp(rng));
    const auto summary = summarize(v);
    std::vector<bool> prev(96, false);
    for (double b : betas) {
      std::vector<bool> cur(96, false);
      for (const auto& det : gate(summary, {b}).detections) {
        const int ch = canonical_channel_index(det.id);
        CHECK_FALSE(cur[ch]);
        cur[ch] = true;
      }
      for (int ch = 0; ch < 96; ++ch)
        if (prev[ch]) CHECK(cur[ch]);
      prev = cur;
    }
  }
}

TEST_CASE("volume file round trip") {
  TempDir dir;
  std::mt19937_64 rng(3);
  const auto v = random_distribution(6, 7, 96, rng, 2.0);
  const std::string path = dir.file("v.pkhv");
  write_volume(v, path);
  const auto r = read_volume(path);
  CHECK_FALSE(r.channel_count_mismatch);
  REQUIRE(r.volume.rows() == 6);
  REQUIRE(r.volume.cols() == 7);
  REQUIRE(r.volume.channels() == 96);
  CHECK(encode_volume(r.volume) == encode_volume(v));
  for (std::size_t i = 0; i < v.data().size(); ++i) CHECK(r.volume.data()[i] == static_cast<double>(static_cast<float>(v.data()[i])));

  const auto bytes = encode_volume(v);
  CHECK(std::memcmp(bytes.data(), "PKHV", 4) == 0);
  CHECK(bytes.size() == 20 + 4 * v.data().size());

  SUBCASE("truncated") {
    CHECK(error_kind_of([&] { decode_volume_bytes(std::span(bytes).first(bytes.size() - 3)); }) == ErrorKind::Format);
    CHECK(error_kind_of([&] { decode_volume_bytes(std::span(bytes).first(10)); }) == ErrorKind::Format);
  }
  SUBCASE("bad magic and version") {
    auto b = bytes;
    b[0] = 'X';
    CHECK(error_kind_of([&] { decode_volume_bytes(b); }) == ErrorKind::Format);
    b = bytes;
    b[4] = 2;
    CHECK(error_kind_of([&] { decode_volume_bytes(b); }) == ErrorKind::Format);
    b = bytes;
    std::memset(b.data() + 8, 0, 4);
    CHECK(error_kind_of([&] { decode_volume_bytes(b); }) == ErrorKind::Format);
  }
  SUBCASE("other channel counts are flagged and refused by decode") {
    const auto three = random_distribution(4, 4, 3, rng, 1.0);
    const auto back = decode_volume_bytes(encode_volume(three));
    CHECK(back.channel_count_mismatch);
    CHECK(back.volume.channels() == 3);
    CHECK(error_kind_of([&] { decode(back.volume, {0.9}); }) == ErrorKind::Shape);
  }
  CHECK(error_kind_of([&] { read_volume(dir.file("missing.pkhv")); }) == ErrorKind::Io);
}

TEST_CASE("distribution validation") {
  HeatmapVolume v(2, 2, 1);
  v.channel(0)[0] = 0.5;
  CHECK(error_kind_of([&] { validate_distributions(v); }) == ErrorKind::Domain);
  v.channel(0)[1] = 0.5;
  CHECK_NOTHROW(validate_distributions(v));
  v.channel(0)[1] = 0.6;
  v.channel(0)[2] = -0.1;
  CHECK(error_kind_of([&] { validate_distributions(v); }) == ErrorKind::Domain);
}

TEST_CASE("annotation and detection invariants") {
  const KeyPointId id{KeyPointClass::WallLeft, 2};
  FrameAnnotation a{"a", 10, 10, {{id, 1, 1}, {id, 2, 2}}};
  CHECK(error_kind_of([&] { validate(a); }) == ErrorKind::Validation);
  a.points.pop_back();
  CHECK_NOTHROW(validate(a));
  a.points[0].u = 10.0;
  CHECK(error_kind_of([&] { validate(a); }) == ErrorKind::OutOfBounds);
  DetectionSet d{"d", 10, 10, {{id, 1, 1, 0}, {id, 2, 2, 0}}};
  CHECK(error_kind_of([&] { validate(d); }) == ErrorKind::Validation);
}
