#include "poolkp/annotation_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "io_util.hpp"
#include "poolkp/error.hpp"

namespace poolkp {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

KeyPointId id_from_json(const nlohmann::json& j) {
  const std::string label = detail::require_string(j, "class") + "_" + std::to_string(detail::require_integer(j, "index"));
  const auto id = keypoint_from_label(label);
  if (!id) throw Error(ErrorKind::Validation, "unknown key-point '" + label + "'");
  return *id;
}

int positive_dim(const nlohmann::json& j, const char* field) {
  const long long v = detail::require_integer(j, field);
  if (v <= 0 || v > (1 << 20)) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be a positive size");
  return static_cast<int>(v);
}

double parse_number(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) throw Error(ErrorKind::Validation, context + ": bad number '" + text + "'");
  return v;
}

std::string exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

nlohmann::json to_json(const FrameAnnotation& ann) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : ann.points) points.push_back({{"class", class_name(p.id.cls)}, {"index", p.id.index}, {"u", p.u}, {"v", p.v}});
  return {{"frame_id", ann.frame_id}, {"rows", ann.rows}, {"cols", ann.cols}, {"points", std::move(points)}};
}

nlohmann::json to_json(const DetectionSet& det) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : det.detections)
    dets.push_back({{"class", class_name(d.id.cls)}, {"index", d.id.index}, {"u", d.u}, {"v", d.v}, {"entropy", d.entropy}});
  return {{"frame_id", det.frame_id}, {"rows", det.rows}, {"cols", det.cols}, {"detections", std::move(dets)}};
}

FrameAnnotation annotation_from_json(const nlohmann::json& j) {
  FrameAnnotation ann;
  ann.frame_id = detail::require_string(j, "frame_id");
  ann.rows = positive_dim(j, "rows");
  ann.cols = positive_dim(j, "cols");
  const auto& points = detail::require_field(j, "points");
  if (!points.is_array()) throw Error(ErrorKind::Validation, "field 'points' must be an array");
  for (const auto& p : points) ann.points.push_back({id_from_json(p), detail::require_number(p, "u"), detail::require_number(p, "v")});
  try {
    validate(ann);
  } catch (const Error& e) {
    throw Error(ErrorKind::Validation, e.what());
  }
  return ann;
}

DetectionSet detections_from_json(const nlohmann::json& j) {
  DetectionSet det;
  det.frame_id = detail::require_string(j, "frame_id");
  det.rows = positive_dim(j, "rows");
  det.cols = positive_dim(j, "cols");
  const auto& dets = detail::require_field(j, "detections");
  if (!dets.is_array()) throw Error(ErrorKind::Validation, "field 'detections' must be an array");
  for (const auto& d : dets)
    det.detections.push_back({id_from_json(d), detail::require_number(d, "u"), detail::require_number(d, "v"), detail::require_number(d, "entropy")});
  validate(det);
  return det;
}

void save_annotation(const FrameAnnotation& ann, const std::string& path) { detail::write_json_file(path, to_json(ann)); }

FrameAnnotation load_annotation(const std::string& path) {
  try {
    return annotation_from_json(detail::read_json_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Validation) throw Error(e.kind(), path + ": " + e.what());
    throw;
  }
}

void save_detections(const DetectionSet& det, const std::string& path) { detail::write_json_file(path, to_json(det)); }

DetectionSet load_detections(const std::string& path) {
  try {
    return detections_from_json(detail::read_json_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Validation) throw Error(e.kind(), path + ": " + e.what());
    throw;
  }
}

std::vector<FrameAnnotation> parse_cvat(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorKind::Parse, "CVAT XML line " + std::to_string(e.line()) + ": " + e.message());
  }
  const auto root = tree.get_child_optional("annotations");
  if (!root) throw Error(ErrorKind::Parse, "CVAT XML has no <annotations> root");

  std::vector<FrameAnnotation> frames;
  std::set<std::string> ids;
  for (const auto& [tag, image] : *root) {
    if (tag != "image") continue;
    const std::string name = image.get<std::string>("<xmlattr>.name", "");
    if (name.empty()) throw Error(ErrorKind::Validation, "CVAT <image> without a name");
    FrameAnnotation ann;
    ann.frame_id = fs::path(name).stem().string();
    const std::string ctx = "image '" + name + "'";
    ann.cols = static_cast<int>(parse_number(image.get<std::string>("<xmlattr>.width", ""), ctx + " width"));
    ann.rows = static_cast<int>(parse_number(image.get<std::string>("<xmlattr>.height", ""), ctx + " height"));
    if (!ids.insert(ann.frame_id).second) throw Error(ErrorKind::Validation, "two CVAT images map to frame id '" + ann.frame_id + "'");

    for (const auto& [shape_tag, shape] : image) {
      if (shape_tag != "points") continue;
      const std::string label = shape.get<std::string>("<xmlattr>.label", "");
      const auto id = keypoint_from_label(label);
      if (!id) throw Error(ErrorKind::Validation, ctx + ": unknown label '" + label + "'");
      const std::string coords = shape.get<std::string>("<xmlattr>.points", "");
      if (coords.find(';') != std::string::npos) throw Error(ErrorKind::Validation, ctx + ": label '" + label + "' holds several points");
      const auto comma = coords.find(',');
      if (comma == std::string::npos) throw Error(ErrorKind::Validation, ctx + ": label '" + label + "' has malformed points '" + coords + "'");
      const double u = parse_number(coords.substr(0, comma), ctx);
      const double v = parse_number(coords.substr(comma + 1), ctx);
      for (const auto& p : ann.points) {
        if (p.id == *id) throw Error(ErrorKind::Validation, ctx + ": label '" + label + "' appears twice");
      }
      ann.points.push_back({*id, u, v});
    }
    try {
      validate(ann);
    } catch (const Error& e) {
      throw Error(ErrorKind::Validation, ctx + ": " + e.what());
    }
    frames.push_back(std::move(ann));
  }
  return frames;
}

std::string to_cvat_xml(const std::vector<FrameAnnotation>& frames) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<annotations>\n  <version>1.1</version>\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    out << "  <image id=\"" << i << "\" name=\"" << f.frame_id << ".png\" width=\"" << f.cols << "\" height=\"" << f.rows << "\">\n";
    for (const auto& p : f.points) {
      out << "    <points label=\"" << keypoint_label(p.id) << "\" occluded=\"0\" source=\"manual\" points=\"" << exact(p.u) << ','
          << exact(p.v) << "\" z_order=\"0\">\n    </points>\n";
    }
    out << "  </image>\n";
  }
  out << "</annotations>\n";
  return out.str();
}

FrameAnnotation rescale_annotation(const FrameAnnotation& ann, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw Error(ErrorKind::Input, "scale factor must be positive");
  FrameAnnotation out = ann;
  out.rows = static_cast<int>(std::lround(ann.rows / factor));
  out.cols = static_cast<int>(std::lround(ann.cols / factor));
  for (auto& p : out.points) {
    p.u /= factor;
    p.v /= factor;
  }
  return out;
}

std::vector<std::string> import_cvat(const std::string& xml_path, double scale_factor, const std::string& out_dir) {
  const auto frames = parse_cvat(detail::read_text_file(xml_path));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + out_dir + "': " + ec.message());
  std::vector<std::string> written;
  for (const auto& f : frames) {
    const auto scaled = rescale_annotation(f, scale_factor);
    const std::string path = (fs::path(out_dir) / (scaled.frame_id + ".json")).string();
    save_annotation(scaled, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace poolkp
