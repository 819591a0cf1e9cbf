#include "poolkp/heatmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "io_util.hpp"
#include "poolkp/error.hpp"

static_assert(std::endian::native == std::endian::little, "volume I/O assumes a little-endian host");
static_assert(std::numeric_limits<float>::is_iec559);

namespace poolkp {

namespace {

constexpr char kMagic[4] = {'P', 'K', 'H', 'V'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

void check_dims(int rows, int cols, int channels) {
  if (rows <= 0 || cols <= 0 || channels <= 0)
    throw Error(ErrorKind::Shape, "volume dimensions must be positive (" + std::to_string(rows) + "x" + std::to_string(cols) + "x" +
                                      std::to_string(channels) + ")");
}

std::string shape_string(const HeatmapVolume& v) {
  return std::to_string(v.channels()) + "x" + std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

// Half-up rounding onto the grid; points in [n-0.5, n) fold back onto the last cell.
int round_to_cell(double x, int n) { return std::clamp(static_cast<int>(std::floor(x + 0.5)), 0, n - 1); }

std::uint32_t load_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  std::memcpy(&v, bytes.data() + offset, sizeof v);
  return v;
}

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::Format, "volume format error at byte " + std::to_string(offset) + ": " + what);
}

}  // namespace

HeatmapVolume::HeatmapVolume(int rows, int cols, int channels) : rows_(rows), cols_(cols), channels_(channels) {
  check_dims(rows, cols, channels);
  data_.assign(cells() * static_cast<std::size_t>(channels), 0.0);
}

HeatmapVolume::HeatmapVolume(int rows, int cols, int channels, std::vector<double> data)
    : rows_(rows), cols_(cols), channels_(channels), data_(std::move(data)) {
  check_dims(rows, cols, channels);
  if (data_.size() != cells() * static_cast<std::size_t>(channels))
    throw Error(ErrorKind::Shape, "volume payload has " + std::to_string(data_.size()) + " values, expected " +
                                      std::to_string(cells() * static_cast<std::size_t>(channels)));
}

std::span<const double> HeatmapVolume::channel(int k) const {
  if (k < 0 || k >= channels_) throw Error(ErrorKind::Input, "channel index out of range");
  return {data_.data() + static_cast<std::size_t>(k) * cells(), cells()};
}

std::span<double> HeatmapVolume::channel(int k) {
  if (k < 0 || k >= channels_) throw Error(ErrorKind::Input, "channel index out of range");
  return {data_.data() + static_cast<std::size_t>(k) * cells(), cells()};
}

void validate_distributions(const HeatmapVolume& volume, double tolerance) {
  for (int k = 0; k < volume.channels(); ++k) {
    double sum = 0.0;
    for (double p : volume.channel(k)) {
      if (!std::isfinite(p) || p < 0.0) throw Error(ErrorKind::Domain, "channel " + std::to_string(k) + " holds a negative or non-finite value");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tolerance)
      throw Error(ErrorKind::Domain, "channel " + std::to_string(k) + " sums to " + std::to_string(sum) + ", not 1");
  }
}

void validate(const FrameAnnotation& ann) {
  if (ann.rows <= 0 || ann.cols <= 0) throw Error(ErrorKind::Validation, "annotation '" + ann.frame_id + "' needs positive rows/cols");
  std::vector<bool> seen(kChannelCount, false);
  for (const auto& p : ann.points) {
    if (!is_valid(p.id)) throw Error(ErrorKind::Validation, "annotation '" + ann.frame_id + "' holds an invalid key-point id");
    const int ch = canonical_channel_index(p.id);
    if (seen[static_cast<std::size_t>(ch)])
      throw Error(ErrorKind::Validation, "annotation '" + ann.frame_id + "' repeats " + keypoint_label(p.id));
    seen[static_cast<std::size_t>(ch)] = true;
    if (!(p.u >= 0.0 && p.u < ann.cols && p.v >= 0.0 && p.v < ann.rows))
      throw Error(ErrorKind::OutOfBounds, "annotation '" + ann.frame_id + "': " + keypoint_label(p.id) + " at (" + std::to_string(p.u) + ", " +
                                              std::to_string(p.v) + ") lies outside the frame");
  }
}

void validate(const DetectionSet& det) {
  std::vector<bool> seen(kChannelCount, false);
  for (const auto& d : det.detections) {
    if (!is_valid(d.id)) throw Error(ErrorKind::Validation, "detection set '" + det.frame_id + "' holds an invalid key-point id");
    const int ch = canonical_channel_index(d.id);
    if (seen[static_cast<std::size_t>(ch)])
      throw Error(ErrorKind::Validation, "detection set '" + det.frame_id + "' has two detections on channel " + keypoint_label(d.id));
    seen[static_cast<std::size_t>(ch)] = true;
  }
}

HeatmapVolume make_target_volume(const FrameAnnotation& ann, int rows, int cols) {
  check_dims(rows, cols, kChannelCount);
  validate(ann);
  double factor = 1.0;
  if (ann.rows != rows || ann.cols != cols) {
    const double fr = static_cast<double>(ann.rows) / rows;
    const double fc = static_cast<double>(ann.cols) / cols;
    if (std::abs(fr - fc) > 1e-9 * std::max(fr, fc))
      throw Error(ErrorKind::Shape, "annotation " + std::to_string(ann.rows) + "x" + std::to_string(ann.cols) + " does not scale uniformly to " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
    factor = fr;
  }

  HeatmapVolume volume(rows, cols);
  const double flat = 1.0 / static_cast<double>(volume.cells());
  for (int k = 0; k < kChannelCount; ++k) std::ranges::fill(volume.channel(k), flat);
  for (const auto& p : ann.points) {
    const double u = p.u / factor;
    const double v = p.v / factor;
    if (!(u >= 0.0 && u < cols && v >= 0.0 && v < rows))
      throw Error(ErrorKind::OutOfBounds, keypoint_label(p.id) + " falls outside the " + std::to_string(rows) + "x" + std::to_string(cols) + " grid");
    auto ch = volume.channel(canonical_channel_index(p.id));
    std::ranges::fill(ch, 0.0);
    ch[static_cast<std::size_t>(round_to_cell(v, rows)) * cols + round_to_cell(u, cols)] = 1.0;
  }
  return volume;
}

HeatmapVolume softmax_normalize(int rows, int cols, int channels, std::span<const double> logits) {
  HeatmapVolume volume(rows, cols, channels);
  if (logits.size() != volume.data().size()) throw Error(ErrorKind::Shape, "logit count does not match " + shape_string(volume));
  const std::size_t n = volume.cells();
  for (int k = 0; k < channels; ++k) {
    const auto in = logits.subspan(static_cast<std::size_t>(k) * n, n);
    if (!std::ranges::all_of(in, [](double x) { return std::isfinite(x); }))
      throw Error(ErrorKind::Numeric, "non-finite logit in channel " + std::to_string(k));
    const double peak = *std::ranges::max_element(in);
    auto out = volume.channel(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::exp(in[i] - peak);
      sum += out[i];
    }
    for (double& x : out) x /= sum;
  }
  return volume;
}

double cross_entropy_loss(const HeatmapVolume& target, const HeatmapVolume& pred) {
  if (target.rows() != pred.rows() || target.cols() != pred.cols() || target.channels() != pred.channels())
    throw Error(ErrorKind::Shape, "target " + shape_string(target) + " vs prediction " + shape_string(pred));
  const auto& y = target.data();
  const auto& h = pred.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) loss -= y[i] * std::log(std::max(h[i], kLogEpsilon));
  }
  return loss;
}

double channel_entropy(std::span<const double> channel) {
  double h = 0.0;
  for (double p : channel) {
    if (p < 0.0) throw Error(ErrorKind::Domain, "negative probability in channel");
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

VolumeSummary summarize(const HeatmapVolume& volume, const std::string& frame_id) {
  if (volume.channels() != kChannelCount)
    throw Error(ErrorKind::Shape, "decoding needs " + std::to_string(kChannelCount) + " channels, volume has " + std::to_string(volume.channels()));
  VolumeSummary s{frame_id, volume.rows(), volume.cols(), {}};
  s.channels.resize(kChannelCount);
  for (int k = 0; k < kChannelCount; ++k) {
    const auto ch = volume.channel(k);
    // max_element returns the first maximum: ties go to the smallest row-major index.
    const auto best = static_cast<int>(std::ranges::max_element(ch) - ch.begin());
    s.channels[static_cast<std::size_t>(k)] = {channel_entropy(ch), best / volume.cols(), best % volume.cols()};
  }
  return s;
}

DetectionSet gate(const VolumeSummary& summary, const DecodeParams& params) {
  if (!(params.beta >= 0.0 && params.beta <= 1.0)) throw Error(ErrorKind::Input, "beta must lie in [0, 1]");
  const double threshold = params.beta * std::log(static_cast<double>(summary.rows) * summary.cols);
  DetectionSet out{summary.frame_id, summary.rows, summary.cols, {}};
  for (int k = 0; k < static_cast<int>(summary.channels.size()); ++k) {
    const auto& c = summary.channels[static_cast<std::size_t>(k)];
    if (c.entropy < threshold) out.detections.push_back({keypoint_from_channel(k), double(c.col), double(c.row), c.entropy});
  }
  return out;
}

DetectionSet decode(const HeatmapVolume& volume, const DecodeParams& params, const std::string& frame_id) {
  return gate(summarize(volume, frame_id), params);
}

std::vector<std::uint8_t> encode_volume(const HeatmapVolume& volume) {
  const std::size_t n = volume.data().size();
  std::vector<std::uint8_t> bytes(kHeaderBytes + n * sizeof(float));
  std::memcpy(bytes.data(), kMagic, 4);
  const std::uint32_t header[4] = {kVolumeFormatVersion, static_cast<std::uint32_t>(volume.rows()), static_cast<std::uint32_t>(volume.cols()),
                                   static_cast<std::uint32_t>(volume.channels())};
  std::memcpy(bytes.data() + 4, header, sizeof header);
  std::uint8_t* out = bytes.data() + kHeaderBytes;
  for (double x : volume.data()) {
    const float f = static_cast<float>(x);
    std::memcpy(out, &f, sizeof f);
    out += sizeof f;
  }
  return bytes;
}

void write_volume(const HeatmapVolume& volume, const std::string& path) {
  const auto bytes = encode_volume(volume);
  detail::write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

ReadVolumeResult decode_volume_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) format_error(bytes.size(), "truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) format_error(0, "bad magic");
  const std::uint32_t version = load_u32(bytes, 4);
  if (version != kVolumeFormatVersion) format_error(4, "unsupported version " + std::to_string(version));
  const std::uint32_t rows = load_u32(bytes, 8);
  const std::uint32_t cols = load_u32(bytes, 12);
  const std::uint32_t channels = load_u32(bytes, 16);
  if (rows == 0 || rows > (1u << 16)) format_error(8, "bad row count " + std::to_string(rows));
  if (cols == 0 || cols > (1u << 16)) format_error(12, "bad column count " + std::to_string(cols));
  if (channels == 0 || channels > 4096) format_error(16, "bad channel count " + std::to_string(channels));
  const std::size_t n = std::size_t(rows) * cols * channels;
  const std::size_t expected = kHeaderBytes + n * sizeof(float);
  if (bytes.size() < expected) format_error(bytes.size(), "truncated payload, expected " + std::to_string(expected) + " bytes");
  if (bytes.size() > expected) format_error(expected, "trailing bytes after payload");

  std::vector<double> data(n);
  const std::uint8_t* in = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    float f = 0.0f;
    std::memcpy(&f, in + i * sizeof f, sizeof f);
    data[i] = f;
  }
  ReadVolumeResult r{HeatmapVolume(int(rows), int(cols), int(channels), std::move(data)), channels != kChannelCount};
  return r;
}

ReadVolumeResult read_volume(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return decode_volume_bytes({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace poolkp
