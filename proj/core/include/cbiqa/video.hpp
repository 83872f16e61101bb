#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cbiqa/codebook.hpp"
#include "cbiqa/encoder.hpp"
#include "cbiqa/image.hpp"
#include "cbiqa/preprocess.hpp"

namespace cbiqa {

struct FrameFeatureSeries {
  double fps = 0.0;
  std::vector<double> timestamps;                // seconds, strictly increasing
  std::vector<std::vector<double>> rows;         // per-frame features

  std::size_t frames() const { return rows.size(); }
  void validate() const;
};

// Frames per second to keep, or one frame per video.
struct SamplingRate {
  double per_second = 0.0;  // <= 0 together with one_per_video == false means all frames
  bool one_per_video = false;

  static SamplingRate all() { return {}; }
  static SamplingRate every_video() { return {0.0, true}; }
  static SamplingRate fps(double rate) { return {rate, false}; }
};

// First frame of every 1/rate-second bucket (frame i lives at time i / fps).
std::vector<std::size_t> sample_frames(std::size_t frame_count, double fps, SamplingRate rate);

// Keeps every `step`-th frame (1 keeps all).
std::vector<std::size_t> every_nth_frame(std::size_t frame_count, std::size_t step);

std::vector<double> average_pool(const FrameFeatureSeries& series);

// Per segment of `segment_seconds` (by timestamp, trailing partial segment
// kept): [mean | population std]; the segment vectors are then averaged.
std::vector<double> std_pool(const FrameFeatureSeries& series, double segment_seconds = 1.0);

// raw * c sqrt(b) / (k + sqrt(b)).
double bitrate_multiplier(double bitrate, double c, double k);
double bitrate_rescale(double raw_score, double bitrate, double c, double k);

struct RescaleParams {
  double c = 1.0;
  double k = 1.0;
};

// k = sqrt(median bitrate); c chosen so the largest rescaled calibration score
// is 100. Requires nonnegative scores so the set lands in [0, 100].
RescaleParams calibrate_rescale(std::span<const double> raw_scores, std::span<const double> bitrates);

// Sequential frame reader: Y4M files or directories of numbered images.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual double fps() const = 0;
  virtual std::size_t frame_count() const = 0;
  virtual YuvPlanes frame(std::size_t index) = 0;
};

// Y4M (4:2:0 variants, 4:4:4, mono). Frames are indexed in a first pass.
std::unique_ptr<FrameSource> open_y4m(const std::filesystem::path& path);
// Sorted images of a directory at a caller-supplied frame rate.
std::unique_ptr<FrameSource> open_frame_directory(const std::filesystem::path& dir, double fps);
// Greyscale frames held in memory (chroma planes are neutral 128).
std::unique_ptr<FrameSource> memory_source(std::vector<ImagePlane> luma_frames, double fps);
std::unique_ptr<FrameSource> open_video(const std::filesystem::path& path, double fallback_fps = 30.0);

void write_y4m(const std::filesystem::path& path, const std::vector<ImagePlane>& luma_frames, double fps);

// `none` is the image setting; applied to a video it behaves like `average`.
enum class Pooling { none, average, std_dev };

struct VideoFeatureOptions {
  SamplingRate rate = SamplingRate::fps(1.0);
  std::size_t frame_step = 1;  // additional every-nth subsampling, applied first
  Pooling pooling = Pooling::average;
  double segment_seconds = 1.0;
  EncodeOptions encode;
};

// Frame indices kept by `frame_step` subsampling followed by rate bucketing.
std::vector<std::size_t> select_frames(std::size_t frame_count, double fps, std::size_t frame_step, SamplingRate rate);

// Selected frames' features with their timestamps.
FrameFeatureSeries extract_series(const Codebook& book, FrameSource& source, const VideoFeatureOptions& options);
std::vector<double> pool(const FrameFeatureSeries& series, const VideoFeatureOptions& options);
FeatureVector video_features(const Codebook& book, FrameSource& source, const VideoFeatureOptions& options);

}  // namespace cbiqa
