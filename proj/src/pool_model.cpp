#include "poolkp/pool_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "io_util.hpp"
#include "poolkp/error.hpp"

namespace poolkp {

namespace {

constexpr std::array<std::string_view, 8> kClassNames = {
    "wall_left",     "wall_right",     "floating_left", "floating_right",
    "bulkhead_left", "bulkhead_right", "wall_top",      "wall_bottom",
};

constexpr double kWallMarkSpacingM = 5.0;

[[noreturn]] void config_error(const std::string& rule) { throw Error(ErrorKind::Config, "invalid pool configuration: " + rule); }

bool in_set(int v, std::initializer_list<int> set) { return std::find(set.begin(), set.end(), v) != set.end(); }

// y of a lane-indexed key-point, or nullopt when that rope does not exist.
std::optional<double> lane_rope_y(const PoolConfig& c, int index) {
  const int lanes = lanes_per_section(c);
  const double bumper = c.bumpers ? c.bumper_width_m : 0.0;
  if (index == 0) return 0.0;
  if (index == kLaneIndexCount - 1) return outline_width_m(c);
  if (index == 1) return c.bumpers ? std::optional<double>(bumper) : std::nullopt;
  if (index <= lanes) return bumper + (index - 1) * c.lane_width_m;
  if (index == lanes + 1) return c.bumpers ? std::optional<double>(bumper + lanes * c.lane_width_m) : std::nullopt;
  return std::nullopt;
}

}  // namespace

std::string_view class_name(KeyPointClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<KeyPointClass> class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return kAllClasses[i];
  }
  return std::nullopt;
}

bool is_valid(const KeyPointId& id) {
  const int c = static_cast<int>(id.cls);
  return c >= 0 && c < static_cast<int>(kAllClasses.size()) && id.index >= 0 && id.index < index_count(id.cls);
}

int canonical_channel_index(const KeyPointId& id) {
  const int c = static_cast<int>(id.cls);
  if (is_lane_indexed(id.cls)) return c * kLaneIndexCount + id.index;
  return 6 * kLaneIndexCount + (c - 6) * kLengthIndexCount + id.index;
}

KeyPointId keypoint_from_channel(int channel) {
  if (channel < 0 || channel >= kChannelCount) throw Error(ErrorKind::Input, "channel out of range: " + std::to_string(channel));
  if (channel < 6 * kLaneIndexCount) return {kAllClasses[channel / kLaneIndexCount], channel % kLaneIndexCount};
  const int rest = channel - 6 * kLaneIndexCount;
  return {kAllClasses[6 + rest / kLengthIndexCount], rest % kLengthIndexCount};
}

std::string keypoint_label(const KeyPointId& id) { return std::string(class_name(id.cls)) + "_" + std::to_string(id.index); }

std::optional<KeyPointId> keypoint_from_label(std::string_view label) {
  const auto sep = label.rfind('_');
  if (sep == std::string_view::npos || sep + 1 >= label.size()) return std::nullopt;
  const auto cls = class_from_name(label.substr(0, sep));
  if (!cls) return std::nullopt;
  const auto digits = label.substr(sep + 1);
  int index = -1;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  KeyPointId id{*cls, index};
  if (!is_valid(id)) return std::nullopt;
  return id;
}

void validate(const PoolConfig& c) {
  if (!in_set(c.lanes, {6, 8, 10, 12, 16, 20})) config_error("lanes must be one of 6, 8, 10, 12, 16, 20 (got " + std::to_string(c.lanes) + ")");
  if (!in_set(c.length_m, {25, 50})) config_error("length must be 25 or 50 m (got " + std::to_string(c.length_m) + ")");
  if (c.lanes > 10 && c.length_m != 25) config_error("more than 10 lanes requires a 25 m pool");
  if (c.bulkhead && c.lanes <= 10) config_error("a bulkhead requires 12, 16 or 20 lanes");
  if (!c.bulkhead && c.lanes > 10) config_error("12, 16 and 20 lane pools are bulkhead pools");
  if (!(c.lane_width_m > 0.0) || !std::isfinite(c.lane_width_m)) config_error("lane width must be positive");
  if (!(c.bumper_width_m >= 0.0) || !std::isfinite(c.bumper_width_m)) config_error("bumper width must be non-negative");
  if (!(c.bulkhead_width_m >= 0.0) || !std::isfinite(c.bulkhead_width_m)) config_error("bulkhead width must be non-negative");
  if (c.bulkhead) {
    const double length = outline_length_m(c);
    const double x = c.bulkhead_x_m.value_or(length / 2.0);
    if (!(x - c.bulkhead_width_m / 2.0 > 0.0 && x + c.bulkhead_width_m / 2.0 < length))
      config_error("bulkhead must lie strictly inside the pool");
  }
}

std::vector<PoolConfig> standard_configs(bool bumpers) {
  std::vector<PoolConfig> out;
  for (int length : {25, 50}) {
    for (int lanes : {6, 8, 10}) {
      PoolConfig c;
      c.lanes = lanes;
      c.length_m = length;
      c.bumpers = bumpers;
      out.push_back(c);
    }
  }
  for (int lanes : {12, 16, 20}) {
    PoolConfig c;
    c.lanes = lanes;
    c.length_m = 25;
    c.bumpers = bumpers;
    c.bulkhead = true;
    out.push_back(c);
  }
  return out;
}

int lanes_per_section(const PoolConfig& c) { return c.bulkhead ? c.lanes / 2 : c.lanes; }

double outline_length_m(const PoolConfig& c) { return c.bulkhead ? 2.0 * c.length_m : static_cast<double>(c.length_m); }

double outline_width_m(const PoolConfig& c) {
  return lanes_per_section(c) * c.lane_width_m + (c.bumpers ? 2.0 * c.bumper_width_m : 0.0);
}

const ModelEntry& BasePoolModel::entry(const KeyPointId& id) const {
  if (!is_valid(id)) throw Error(ErrorKind::Input, "invalid key-point id");
  return entries_[static_cast<std::size_t>(canonical_channel_index(id))];
}

std::optional<double> BasePoolModel::bulkhead_x_m() const {
  if (!config_.bulkhead) return std::nullopt;
  return config_.bulkhead_x_m.value_or(length_m() / 2.0);
}

int BasePoolModel::existing_count() const {
  return static_cast<int>(std::count_if(entries_.begin(), entries_.end(), [](const ModelEntry& e) { return e.exists; }));
}

BasePoolModel build_base_model(const PoolConfig& config) {
  validate(config);
  BasePoolModel model;
  model.config_ = config;
  model.entries_.resize(kChannelCount);

  const double length = outline_length_m(config);
  const double width = outline_width_m(config);
  const auto bulkhead_x = model.bulkhead_x_m();

  for (int ch = 0; ch < kChannelCount; ++ch) {
    ModelEntry& e = model.entries_[static_cast<std::size_t>(ch)];
    e.id = keypoint_from_channel(ch);
    e.location.kind = is_floating(e.id.cls) ? LocationKind::HorizontalLine : LocationKind::FixedPoint;

    if (is_lane_indexed(e.id.cls)) {
      const auto y = lane_rope_y(config, e.id.index);
      if (!y) continue;
      e.location.y_m = *y;
      switch (e.id.cls) {
        case KeyPointClass::WallLeft: e.exists = true; e.location.x_m = 0.0; break;
        case KeyPointClass::WallRight: e.exists = true; e.location.x_m = length; break;
        case KeyPointClass::FloatingLeft:
        case KeyPointClass::FloatingRight: e.exists = true; break;
        case KeyPointClass::BulkheadLeft:
          if (bulkhead_x) { e.exists = true; e.location.x_m = *bulkhead_x - config.bulkhead_width_m / 2.0; }
          break;
        case KeyPointClass::BulkheadRight:
          if (bulkhead_x) { e.exists = true; e.location.x_m = *bulkhead_x + config.bulkhead_width_m / 2.0; }
          break;
        default: break;
      }
    } else {
      // Wall marks every 5 m along the top and bottom walls.
      const double x = kWallMarkSpacingM * (e.id.index + 1);
      if (x >= length) continue;
      if (config.bulkhead && e.id.index == 4) continue;
      e.exists = true;
      e.location.x_m = x;
      e.location.y_m = e.id.cls == KeyPointClass::WallTop ? width : 0.0;
    }
  }
  return model;
}

std::vector<BasePixelEntry> base_pixel_coordinates(const BasePoolModel& model, double scale_px_per_m) {
  if (!(scale_px_per_m > 0.0) || !std::isfinite(scale_px_per_m)) throw Error(ErrorKind::Input, "scale must be positive");
  std::vector<BasePixelEntry> out;
  for (const auto& e : model.entries()) {
    if (!e.exists) continue;
    BasePixelEntry p;
    p.id = e.id;
    p.kind = e.location.kind;
    p.y_px = e.location.y_m * scale_px_per_m;
    if (p.kind == LocationKind::FixedPoint) p.x_px = e.location.x_m * scale_px_per_m;
    out.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const PoolConfig& c) {
  nlohmann::json j = {
      {"lanes", c.lanes},
      {"length_m", c.length_m},
      {"bumpers", c.bumpers},
      {"bulkhead", c.bulkhead},
      {"lane_width_m", c.lane_width_m},
      {"bumper_width_m", c.bumper_width_m},
      {"bulkhead_width_m", c.bulkhead_width_m},
  };
  if (c.bulkhead_x_m) j["bulkhead_x_m"] = *c.bulkhead_x_m;
  return j;
}

nlohmann::json to_json(const BasePoolModel& model) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : model.entries()) {
    nlohmann::json je = {
        {"class", class_name(e.id.cls)},
        {"index", e.id.index},
        {"exists", e.exists},
        {"kind", e.location.kind == LocationKind::FixedPoint ? "fixed_point" : "horizontal_line"},
    };
    if (e.exists && e.location.kind == LocationKind::FixedPoint) je["x_m"] = e.location.x_m;
    je["y_m"] = e.exists ? e.location.y_m : 0.0;
    entries.push_back(std::move(je));
  }
  return {{"config", to_json(model.config())}, {"entries", std::move(entries)}};
}

PoolConfig config_from_json(const nlohmann::json& j) {
  using namespace detail;
  PoolConfig c;
  c.lanes = static_cast<int>(require_integer(j, "lanes"));
  c.length_m = static_cast<int>(require_integer(j, "length_m"));
  c.bumpers = require_bool(j, "bumpers");
  c.bulkhead = require_bool(j, "bulkhead");
  if (j.contains("lane_width_m")) c.lane_width_m = require_number(j, "lane_width_m");
  if (j.contains("bumper_width_m")) c.bumper_width_m = require_number(j, "bumper_width_m");
  if (j.contains("bulkhead_width_m")) c.bulkhead_width_m = require_number(j, "bulkhead_width_m");
  if (j.contains("bulkhead_x_m")) c.bulkhead_x_m = require_number(j, "bulkhead_x_m");
  return c;
}

BasePoolModel model_from_json(const nlohmann::json& j) {
  using namespace detail;
  BasePoolModel model = build_base_model(config_from_json(require_field(j, "config")));
  if (!j.contains("entries")) return model;
  const auto& entries = j.at("entries");
  if (!entries.is_array() || entries.size() != static_cast<std::size_t>(kChannelCount))
    throw Error(ErrorKind::Validation, "field 'entries' must list all 96 key-points");
  for (const auto& je : entries) {
    const std::string label = require_string(je, "class") + "_" + std::to_string(require_integer(je, "index"));
    const auto id = keypoint_from_label(label);
    if (!id) throw Error(ErrorKind::Validation, "unknown key-point '" + label + "' in entries");
    const ModelEntry& e = model.entry(*id);
    bool same = require_bool(je, "exists") == e.exists;
    if (same && e.exists) {
      same = std::abs(require_number(je, "y_m") - e.location.y_m) < 1e-9;
      if (e.location.kind == LocationKind::FixedPoint) same = same && std::abs(require_number(je, "x_m") - e.location.x_m) < 1e-9;
    }
    if (!same) throw Error(ErrorKind::Validation, "entry '" + label + "' disagrees with its config");
  }
  return model;
}

void save_model(const BasePoolModel& model, const std::string& path) { detail::write_json_file(path, to_json(model)); }

BasePoolModel load_model(const std::string& path) { return model_from_json(detail::read_json_file(path)); }

}  // namespace poolkp
