#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "poolkp/heatmap.hpp"

namespace poolkp {

// JSON schemas:
//   annotation  {frame_id, rows, cols, points:[{class, index, u, v}]}
//   detections  {frame_id, rows, cols, detections:[{class, index, u, v, entropy}]}
nlohmann::json to_json(const FrameAnnotation& ann);
nlohmann::json to_json(const DetectionSet& det);
FrameAnnotation annotation_from_json(const nlohmann::json& j);
DetectionSet detections_from_json(const nlohmann::json& j);

void save_annotation(const FrameAnnotation& ann, const std::string& path);
FrameAnnotation load_annotation(const std::string& path);
void save_detections(const DetectionSet& det, const std::string& path);
DetectionSet load_detections(const std::string& path);

/// Reads a "CVAT for images" export. Point shapes labelled "<class>_<index>"
/// become key-points; other shapes are ignored. One annotation per <image>,
/// named after the image file without its extension.
std::vector<FrameAnnotation> parse_cvat(std::string_view xml);
/// Inverse of parse_cvat for the content it models.
std::string to_cvat_xml(const std::vector<FrameAnnotation>& frames);

/// Divides coordinates by `factor`; rows/cols are divided and rounded.
FrameAnnotation rescale_annotation(const FrameAnnotation& ann, double factor);

/// parse_cvat + rescale_annotation, one <frame_id>.json per image in out_dir.
/// Returns the written paths.
std::vector<std::string> import_cvat(const std::string& xml_path, double scale_factor, const std::string& out_dir);

}  // namespace poolkp
