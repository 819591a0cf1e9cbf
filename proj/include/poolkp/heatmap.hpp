#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poolkp/pool_model.hpp"

namespace poolkp {

/// Clamp applied to predicted probabilities before taking logs.
inline constexpr double kLogEpsilon = 1e-12;

/// C channels of M x N probability distributions, channel-major and
/// row-major within a channel. Channel k is canonical channel k.
class HeatmapVolume {
 public:
  HeatmapVolume() = default;
  /// Zero-filled.
  HeatmapVolume(int rows, int cols, int channels = kChannelCount);
  HeatmapVolume(int rows, int cols, int channels, std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  std::size_t cells() const { return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_); }

  std::span<const double> channel(int k) const;
  std::span<double> channel(int k);
  const std::vector<double>& data() const { return data_; }

  double at(int k, int row, int col) const { return channel(k)[static_cast<std::size_t>(row) * cols_ + col]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Throws Error(Domain) on negative or non-finite entries and on channels
/// whose sum is off by more than `tolerance`.
void validate_distributions(const HeatmapVolume& volume, double tolerance = 1e-6);

struct AnnotatedPoint {
  KeyPointId id;
  double u = 0.0;  // column, px
  double v = 0.0;  // row, px

  friend bool operator==(const AnnotatedPoint&, const AnnotatedPoint&) = default;
};

struct FrameAnnotation {
  std::string frame_id;
  int rows = 0;
  int cols = 0;
  std::vector<AnnotatedPoint> points;

  friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

/// At most one point per id and every point inside [0,cols) x [0,rows).
void validate(const FrameAnnotation& ann);

struct Detection {
  KeyPointId id;
  double u = 0.0;
  double v = 0.0;
  double entropy = 0.0;  // nats

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
  std::string frame_id;
  int rows = 0;  // resolution the coordinates refer to
  int cols = 0;
  std::vector<Detection> detections;  // ascending canonical channel

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

/// No channel twice, all ids valid.
void validate(const DetectionSet& det);

struct DecodeParams {
  double beta = 0.9;
};

/// Delta at the rounded annotated cell for present ids, flat for the rest.
/// When the annotation was made at a different resolution it is rescaled by
/// the common factor rows/M == cols/N first.
HeatmapVolume make_target_volume(const FrameAnnotation& ann, int rows, int cols);

/// Per-channel numerically stable softmax over `rows*cols` logits.
HeatmapVolume softmax_normalize(int rows, int cols, int channels, std::span<const double> logits);

/// Summed cross entropy over all channels, in nats.
double cross_entropy_loss(const HeatmapVolume& target, const HeatmapVolume& pred);

/// Shannon entropy in nats with 0 ln 0 = 0.
double channel_entropy(std::span<const double> channel);

/// Entropy and argmax of one channel; the β-independent part of decoding.
struct ChannelStat {
  double entropy = 0.0;
  int row = 0;
  int col = 0;
};

struct VolumeSummary {
  std::string frame_id;
  int rows = 0;
  int cols = 0;
  std::vector<ChannelStat> channels;
};

/// Requires exactly 96 channels.
VolumeSummary summarize(const HeatmapVolume& volume, const std::string& frame_id = {});
/// Applies the gate H < β ln(M N) to a summary.
DetectionSet gate(const VolumeSummary& summary, const DecodeParams& params);
DetectionSet decode(const HeatmapVolume& volume, const DecodeParams& params, const std::string& frame_id = {});

inline constexpr std::uint32_t kVolumeFormatVersion = 1;

/// Binary "PKHV" format: magic, u32 version, u32 M, u32 N, u32 C, then float32
/// payload, all little-endian.
void write_volume(const HeatmapVolume& volume, const std::string& path);
std::vector<std::uint8_t> encode_volume(const HeatmapVolume& volume);

struct ReadVolumeResult {
  HeatmapVolume volume;
  bool channel_count_mismatch = false;  // C != 96; decode() will refuse it
};

ReadVolumeResult decode_volume_bytes(std::span<const std::uint8_t> bytes);
ReadVolumeResult read_volume(const std::string& path);

}  // namespace poolkp
