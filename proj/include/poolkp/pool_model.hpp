#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace poolkp {

enum class KeyPointClass {
  WallLeft,
  WallRight,
  FloatingLeft,
  FloatingRight,
  BulkheadLeft,
  BulkheadRight,
  WallTop,
  WallBottom,
};

inline constexpr std::array<KeyPointClass, 8> kAllClasses = {
    KeyPointClass::WallLeft,     KeyPointClass::WallRight,     KeyPointClass::FloatingLeft,
    KeyPointClass::FloatingRight, KeyPointClass::BulkheadLeft, KeyPointClass::BulkheadRight,
    KeyPointClass::WallTop,      KeyPointClass::WallBottom,
};

inline constexpr int kChannelCount = 96;
inline constexpr int kLaneIndexCount = 13;    // indices 0..12
inline constexpr int kLengthIndexCount = 9;   // indices 0..8

/// True for the six classes indexed by lane-rope (0..12).
constexpr bool is_lane_indexed(KeyPointClass c) {
  return c != KeyPointClass::WallTop && c != KeyPointClass::WallBottom;
}

constexpr int index_count(KeyPointClass c) {
  return is_lane_indexed(c) ? kLaneIndexCount : kLengthIndexCount;
}

constexpr bool is_floating(KeyPointClass c) {
  return c == KeyPointClass::FloatingLeft || c == KeyPointClass::FloatingRight;
}

/// snake_case label, e.g. "wall_left".
std::string_view class_name(KeyPointClass c);
std::optional<KeyPointClass> class_from_name(std::string_view name);

struct KeyPointId {
  KeyPointClass cls = KeyPointClass::WallLeft;
  int index = 0;

  friend bool operator==(const KeyPointId&, const KeyPointId&) = default;
};

bool is_valid(const KeyPointId& id);

/// Channel order: WallLeft 0-12, WallRight, FloatingLeft, FloatingRight,
/// BulkheadLeft, BulkheadRight (13 each), then WallTop 0-8, WallBottom 0-8.
int canonical_channel_index(const KeyPointId& id);
KeyPointId keypoint_from_channel(int channel);

/// "<class>_<index>", e.g. "floating_right_7".
std::string keypoint_label(const KeyPointId& id);
std::optional<KeyPointId> keypoint_from_label(std::string_view label);

struct PoolConfig {
  int lanes = 8;
  int length_m = 50;
  bool bumpers = true;
  bool bulkhead = false;
  double lane_width_m = 2.5;
  double bumper_width_m = 0.25;
  double bulkhead_width_m = 1.0;
  // Centre line of the bulkhead; defaults to the middle of the outline.
  std::optional<double> bulkhead_x_m;
};

/// Throws Error(Config) naming the violated rule.
void validate(const PoolConfig& config);

/// The nine pool types: 6/8/10 lanes at 25 and 50 m, 12/16/20 lanes at 25 m with bulkhead.
std::vector<PoolConfig> standard_configs(bool bumpers = true);

/// Lanes on each side of the bulkhead (all lanes when there is none).
int lanes_per_section(const PoolConfig& config);
/// Length of the modelled outline: 2*length_m for bulkhead pools, length_m otherwise.
double outline_length_m(const PoolConfig& config);
/// Distance between bottom and top walls.
double outline_width_m(const PoolConfig& config);

enum class LocationKind { FixedPoint, HorizontalLine };

struct BaseLocation {
  LocationKind kind = LocationKind::FixedPoint;
  double x_m = 0.0;  // unused for HorizontalLine
  double y_m = 0.0;
};

struct ModelEntry {
  KeyPointId id;
  bool exists = false;
  BaseLocation location;
};

/// Base-frame catalog of all 96 key-points for one pool configuration.
///
/// Frame convention: origin at the bottom-left corner, x along the pool length
/// towards WallRight, y across the lanes towards WallTop, units in meters.
/// Immutable once built.
class BasePoolModel {
 public:
  const PoolConfig& config() const { return config_; }
  /// Indexed by canonical channel.
  const std::vector<ModelEntry>& entries() const { return entries_; }
  const ModelEntry& entry(const KeyPointId& id) const;
  double length_m() const { return outline_length_m(config_); }
  double width_m() const { return outline_width_m(config_); }
  /// x of the bulkhead centre line, or nullopt.
  std::optional<double> bulkhead_x_m() const;
  int existing_count() const;

  friend BasePoolModel build_base_model(const PoolConfig& config);

 private:
  PoolConfig config_;
  std::vector<ModelEntry> entries_;
};

BasePoolModel build_base_model(const PoolConfig& config);

struct BasePixelEntry {
  KeyPointId id;
  LocationKind kind = LocationKind::FixedPoint;
  double x_px = 0.0;  // unused for HorizontalLine
  double y_px = 0.0;
};

/// Existing entries scaled to pixels; absent ids are skipped.
std::vector<BasePixelEntry> base_pixel_coordinates(const BasePoolModel& model, double scale_px_per_m);

nlohmann::json to_json(const BasePoolModel& model);
nlohmann::json to_json(const PoolConfig& config);
PoolConfig config_from_json(const nlohmann::json& j);
/// Rebuilds from the embedded config and checks that the stored entries agree.
BasePoolModel model_from_json(const nlohmann::json& j);

void save_model(const BasePoolModel& model, const std::string& path);
BasePoolModel load_model(const std::string& path);

}  // namespace poolkp
