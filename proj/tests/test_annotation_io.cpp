#include <cmath>
#include <random>

#include "doctest.h"
#include "io_util.hpp"
#include "poolkp/annotation_io.hpp"
#include "poolkp/error.hpp"
#include "test_util.hpp"

using namespace poolkp;

namespace {

FrameAnnotation random_annotation(std::mt19937_64& rng, const std::string& id, int rows, int cols) {
  FrameAnnotation a{id, rows, cols, {}};
  std::uniform_real_distribution<double> u(0.0, cols - 1e-6), v(0.0, rows - 1e-6), coin(0.0, 1.0);
  for (int ch = 0; ch < 96; ++ch)
    if (coin(rng) < 0.3) a.points.push_back({keypoint_from_channel(ch), u(rng), v(rng)});
  return a;
}

std::string cvat_doc(const std::string& body) {
  return "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<annotations>\n<version>1.1</version>\n" + body + "</annotations>\n";
}

}  // namespace

TEST_CASE("parse CVAT points") {
  const auto frames = parse_cvat(cvat_doc(
      "<image id=\"0\" name=\"clips/race_01.png\" width=\"1920\" height=\"1080\">\n"
      "  <points label=\"wall_left_0\" occluded=\"0\" points=\"12.5,800.0\" z_order=\"0\"></points>\n"
      "  <points label=\"floating_right_7\" occluded=\"0\" points=\"1919,400.25\"></points>\n"
      "  <box label=\"swimmer\" xtl=\"1\" ytl=\"1\" xbr=\"5\" ybr=\"5\"></box>\n"
      "</image>\n"));
  REQUIRE(frames.size() == 1);
  const auto& f = frames[0];
  CHECK(f.frame_id == "race_01");
  CHECK(f.rows == 1080);
  CHECK(f.cols == 1920);
  REQUIRE(f.points.size() == 2);
  CHECK(f.points[0] == AnnotatedPoint{{KeyPointClass::WallLeft, 0}, 12.5, 800.0});
  CHECK(f.points[1] == AnnotatedPoint{{KeyPointClass::FloatingRight, 7}, 1919.0, 400.25});
}

TEST_CASE("CVAT errors") {
  CHECK(parse_cvat(cvat_doc("")).empty());
  try {
    parse_cvat(cvat_doc("<image name=\"a.png\" width=\"10\" height=\"10\"><points label=\"wall_left_13\" points=\"1,1\"/></image>"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("wall_left_13") != std::string::npos);
  }
  try {
    parse_cvat("<annotations>\n<image name=\"a.png\">\n</annotations>");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  CHECK(error_kind_of([] {
          parse_cvat(cvat_doc("<image name=\"a.png\" width=\"10\" height=\"10\"><points label=\"wall_top_1\" points=\"1,1;2,2\"/></image>"));
        }) == ErrorKind::Validation);
  CHECK(error_kind_of([] {
          parse_cvat(cvat_doc("<image name=\"a.png\" width=\"10\" height=\"10\"><points label=\"wall_top_1\" points=\"1,1\"/>"
                              "<points label=\"wall_top_1\" points=\"2,2\"/></image>"));
        }) == ErrorKind::Validation);
  CHECK(error_kind_of([] {
          parse_cvat(cvat_doc("<image name=\"a.png\" width=\"10\" height=\"10\"></image><image name=\"b/a.jpg\" width=\"10\" height=\"10\"></image>"));
        }) == ErrorKind::Validation);
  CHECK(error_kind_of([] {
          parse_cvat(cvat_doc("<image name=\"a.png\" width=\"10\" height=\"10\"><points label=\"wall_top_1\" points=\"11,1\"/></image>"));
        }) == ErrorKind::Validation);
}

TEST_CASE("CVAT round trip") {
  std::mt19937_64 rng(12);
  std::vector<FrameAnnotation> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(random_annotation(rng, "frame_" + std::to_string(i), 1080, 1920));
  CHECK(parse_cvat(to_cvat_xml(frames)) == frames);
}

TEST_CASE("rescale") {
  FrameAnnotation a{"r", 1080, 1920, {{{KeyPointClass::WallTop, 0}, 1919.0, 1079.0}}};
  const auto s = rescale_annotation(a, 3.75);
  CHECK(s.rows == 288);
  CHECK(s.cols == 512);
  CHECK(s.points[0].u == doctest::Approx(511.7333333333));
  CHECK(s.points[0].v == doctest::Approx(287.7333333333));
  CHECK_NOTHROW(validate(s));
  CHECK(rescale_annotation(a, 1.0) == a);

  std::mt19937_64 rng(13);
  const auto b = random_annotation(rng, "c", 1080, 1920);
  const auto once = rescale_annotation(b, 1.5 * 2.5);
  const auto twice = rescale_annotation(rescale_annotation(b, 1.5), 2.5);
  REQUIRE(once.points.size() == twice.points.size());
  for (std::size_t i = 0; i < once.points.size(); ++i) {
    CHECK(std::abs(once.points[i].u - twice.points[i].u) < 1e-9);
    CHECK(std::abs(once.points[i].v - twice.points[i].v) < 1e-9);
  }
  CHECK(error_kind_of([&] { rescale_annotation(a, 0.0); }) == ErrorKind::Input);
}

TEST_CASE("JSON files") {
  TempDir dir;
  std::mt19937_64 rng(14);
  const auto a = random_annotation(rng, "j", 288, 512);
  save_annotation(a, dir.file("a.json"));
  CHECK(load_annotation(dir.file("a.json")) == a);

  DetectionSet d{"j", 288, 512, {{{KeyPointClass::WallLeft, 2}, 3.0, 4.0, 0.5}, {{KeyPointClass::WallTop, 8}, 100.0, 7.0, 0.0}}};
  save_detections(d, dir.file("d.json"));
  CHECK(load_detections(dir.file("d.json")) == d);

  auto j = to_json(a);
  j.erase("points");
  detail::write_json_file(dir.file("bad.json"), j);
  try {
    load_annotation(dir.file("bad.json"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("points") != std::string::npos);
  }

  auto dj = to_json(d);
  dj["detections"][1]["class"] = "wall_left";
  dj["detections"][1]["index"] = 2;
  detail::write_json_file(dir.file("dup.json"), dj);
  CHECK(error_kind_of([&] { load_detections(dir.file("dup.json")); }) == ErrorKind::Validation);

  detail::write_text_file(dir.file("broken.json"), "{\"frame_id\": ");
  CHECK(error_kind_of([&] { load_annotation(dir.file("broken.json")); }) == ErrorKind::Parse);
  CHECK(error_kind_of([&] { load_annotation(dir.file("nope.json")); }) == ErrorKind::Io);
}

TEST_CASE("import CVAT to a directory") {
  TempDir dir;
  std::mt19937_64 rng(15);
  const std::vector<FrameAnnotation> frames{random_annotation(rng, "a", 1080, 1920), random_annotation(rng, "b", 1080, 1920)};
  detail::write_text_file(dir.file("x.xml"), to_cvat_xml(frames));
  const auto written = import_cvat(dir.file("x.xml"), 3.75, dir.file("out"));
  REQUIRE(written.size() == 2);
  const auto back = load_annotation(written[1]);
  CHECK(back.frame_id == "b");
  CHECK(back.rows == 288);
  CHECK(back.cols == 512);
  CHECK(back.points.size() == frames[1].points.size());
  CHECK(back.points[0].u == doctest::Approx(frames[1].points[0].u / 3.75));
}
