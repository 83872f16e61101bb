#include "cbiqa/video.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "cbiqa/error.hpp"
#include "cbiqa/image_io.hpp"
#include "cbiqa/parallel.hpp"
#include "cbiqa/rng.hpp"

namespace cbiqa {

namespace {

// Bucket arithmetic slack for timestamps like 29/30 s computed in floating point.
constexpr double kBucketSlack = 1e-9;
constexpr std::size_t kFrameChunk = 16;

void check_series(const FrameFeatureSeries& series) {
  if (series.rows.empty()) throw DimensionError("pooling needs at least one frame");
  series.validate();
}

// Mean of `values` summed in sorted order, so that it does not depend on the
// order the frames arrive in.
double ordered_mean(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  if (values.front() == values.back()) return values.front();
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Population standard deviation over sorted values; exactly 0 for constants.
double ordered_std(const std::vector<double>& sorted, double mean) {
  if (sorted.front() == sorted.back()) return 0.0;
  double acc = 0.0;
  for (double v : sorted) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(sorted.size()));
}

}  // namespace

void FrameFeatureSeries::validate() const {
  if (timestamps.size() != rows.size()) throw DimensionError("series: timestamps and rows differ in length");
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (!(timestamps[i] > timestamps[i - 1])) throw ParameterError("series: timestamps must be strictly increasing");
  for (const auto& row : rows)
    if (row.size() != rows.front().size()) throw DimensionError("series: rows differ in length");
}

std::vector<std::size_t> select_frames(std::size_t frame_count, double fps, std::size_t frame_step, SamplingRate rate) {
  if (frame_count == 0) throw DimensionError("sample_frames: empty video");
  if (frame_step == 0) throw ParameterError("frame step must be at least 1");
  if (rate.one_per_video) return {0};
  if (!(fps > 0.0)) throw ParameterError("sample_frames: fps must be positive");
  std::vector<std::size_t> out;
  const bool bucketed = rate.per_second > 0.0 && rate.per_second < fps;
  long long last_bucket = -1;
  for (std::size_t i = 0; i < frame_count; i += frame_step) {
    if (!bucketed) {
      out.push_back(i);
      continue;
    }
    const double t = static_cast<double>(i) / fps;
    const auto bucket = static_cast<long long>(std::floor(t * rate.per_second + kBucketSlack));
    if (bucket != last_bucket) {
      out.push_back(i);
      last_bucket = bucket;
    }
  }
  return out;
}

std::vector<std::size_t> sample_frames(std::size_t frame_count, double fps, SamplingRate rate) {
  return select_frames(frame_count, fps, 1, rate);
}

std::vector<std::size_t> every_nth_frame(std::size_t frame_count, std::size_t step) {
  if (step == 0) throw ParameterError("frame step must be at least 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frame_count; i += step) out.push_back(i);
  return out;
}

std::vector<double> average_pool(const FrameFeatureSeries& series) {
  check_series(series);
  const std::size_t dim = series.rows.front().size();
  std::vector<double> out(dim);
  std::vector<double> column(series.rows.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t r = 0; r < series.rows.size(); ++r) column[r] = series.rows[r][c];
    out[c] = ordered_mean(column);
  }
  return out;
}

std::vector<double> std_pool(const FrameFeatureSeries& series, double segment_seconds) {
  check_series(series);
  if (!(segment_seconds > 0.0)) throw ParameterError("std_pool: segment length must be positive");
  const std::size_t dim = series.rows.front().size();

  // Contiguous runs of frames sharing a segment index.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  const double t0 = series.timestamps.front();
  long long current = -1;
  for (std::size_t r = 0; r < series.rows.size(); ++r) {
    const auto seg = static_cast<long long>(std::floor((series.timestamps[r] - t0) / segment_seconds + kBucketSlack));
    if (seg != current) {
      segments.emplace_back(r, r);
      current = seg;
    }
    segments.back().second = r + 1;
  }

  std::vector<double> out(2 * dim, 0.0);
  std::vector<double> column;
  for (const auto& [begin, end] : segments) {
    column.resize(end - begin);
    for (std::size_t c = 0; c < dim; ++c) {
      for (std::size_t r = begin; r < end; ++r) column[r - begin] = series.rows[r][c];
      const double mean = ordered_mean(column);
      out[c] += mean;
      out[dim + c] += ordered_std(column, mean);
    }
  }
  for (double& v : out) v /= static_cast<double>(segments.size());
  return out;
}

double bitrate_multiplier(double bitrate, double c, double k) {
  if (!(bitrate >= 0.0)) throw ParameterError("bitrate must be nonnegative");
  if (!(c > 0.0) || !(k > 0.0)) throw ParameterError("rescale: c and k must be positive");
  const double root = std::sqrt(bitrate);
  return c * root / (k + root);
}

double bitrate_rescale(double raw_score, double bitrate, double c, double k) {
  return raw_score * bitrate_multiplier(bitrate, c, k);
}

RescaleParams calibrate_rescale(std::span<const double> raw_scores, std::span<const double> bitrates) {
  if (raw_scores.empty() || raw_scores.size() != bitrates.size())
    throw DimensionError("calibrate_rescale: need equal, non-empty score and bitrate lists");
  for (double s : raw_scores)
    if (!(s >= 0.0)) throw ParameterError("calibrate_rescale: raw scores must be nonnegative");
  std::vector<double> sorted(bitrates.begin(), bitrates.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  if (!(median > 0.0)) throw ParameterError("calibrate_rescale: median bitrate must be positive");
  RescaleParams p;
  p.k = std::sqrt(median);
  double top = 0.0;
  for (std::size_t i = 0; i < raw_scores.size(); ++i) top = std::max(top, bitrate_rescale(raw_scores[i], bitrates[i], 1.0, p.k));
  if (!(top > 0.0)) throw ParameterError("calibrate_rescale: all rescaled scores are zero");
  p.c = 100.0 / top;
  return p;
}

// ---------------------------------------------------------------------------
// Frame sources

namespace {

class Y4mSource final : public FrameSource {
 public:
  explicit Y4mSource(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
    std::string header;
    std::getline(in_, header);
    std::istringstream tokens(header);
    std::string token;
    tokens >> token;
    if (token != "YUV4MPEG2") throw FormatError(path.string() + ": not a Y4M file");
    std::string colorspace = "420";
    double num = 30.0, den = 1.0;
    while (tokens >> token) {
      const char tag = token[0];
      const std::string value = token.substr(1);
      try {
        if (tag == 'W') width_ = std::stoul(value);
        if (tag == 'H') height_ = std::stoul(value);
        if (tag == 'C') colorspace = value;
        if (tag == 'F') {
          const auto colon = value.find(':');
          num = std::stod(value.substr(0, colon));
          den = colon == std::string::npos ? 1.0 : std::stod(value.substr(colon + 1));
        }
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": malformed header field " + token);
      }
    }
    if (width_ == 0 || height_ == 0) throw FormatError(path.string() + ": missing frame dimensions");
    if (!(num > 0.0 && den > 0.0)) throw FormatError(path.string() + ": invalid frame rate");
    fps_ = num / den;
    if (colorspace == "420" || colorspace == "420jpeg" || colorspace == "420paldv" || colorspace == "420mpeg2") {
      chroma_w_ = (width_ + 1) / 2;
      chroma_h_ = (height_ + 1) / 2;
    } else if (colorspace == "444") {
      chroma_w_ = width_;
      chroma_h_ = height_;
    } else if (colorspace == "mono") {
      chroma_w_ = chroma_h_ = 0;
    } else {
      throw FormatError(path.string() + ": unsupported colorspace C" + colorspace);
    }
    frame_bytes_ = width_ * height_ + 2 * chroma_w_ * chroma_h_;

    // Index the frames: each is "FRAME[ params]\n" followed by the planes.
    std::string line;
    while (true) {
      if (!std::getline(in_, line)) break;
      if (line.rfind("FRAME", 0) != 0) throw FormatError(path.string() + ": expected FRAME marker");
      offsets_.push_back(in_.tellg());
      in_.seekg(static_cast<std::streamoff>(frame_bytes_), std::ios::cur);
      if (!in_) throw FormatError(path.string() + ": truncated frame " + std::to_string(offsets_.size() - 1));
    }
    in_.clear();
  }

  double fps() const override { return fps_; }
  std::size_t frame_count() const override { return offsets_.size(); }

  YuvPlanes frame(std::size_t index) override {
    if (index >= offsets_.size()) throw DimensionError("y4m: frame index out of range");
    std::vector<unsigned char> data(frame_bytes_);
    in_.seekg(offsets_[index]);
    in_.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(frame_bytes_));
    if (!in_) throw FormatError(path_.string() + ": failed to read frame " + std::to_string(index));
    YuvPlanes out{ImagePlane(width_, height_), ImagePlane(width_, height_, 128.0), ImagePlane(width_, height_, 128.0)};
    for (std::size_t i = 0; i < width_ * height_; ++i) out.y.samples[i] = data[i];
    if (chroma_w_ > 0) {
      const unsigned char* u = data.data() + width_ * height_;
      const unsigned char* v = u + chroma_w_ * chroma_h_;
      const std::size_t sx = width_ / chroma_w_ > 1 ? 2 : 1;
      const std::size_t sy = height_ / chroma_h_ > 1 ? 2 : 1;
      for (std::size_t y = 0; y < height_; ++y) {
        for (std::size_t x = 0; x < width_; ++x) {
          const std::size_t ci = std::min(y / sy, chroma_h_ - 1) * chroma_w_ + std::min(x / sx, chroma_w_ - 1);
          out.u.at(x, y) = u[ci];
          out.v.at(x, y) = v[ci];
        }
      }
    }
    return out;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t width_ = 0, height_ = 0, chroma_w_ = 0, chroma_h_ = 0, frame_bytes_ = 0;
  double fps_ = 30.0;
  std::vector<std::streamoff> offsets_;
};

class DirectorySource final : public FrameSource {
 public:
  DirectorySource(const std::filesystem::path& dir, double fps) : files_(list_images(dir)), fps_(fps) {
    if (!(fps > 0.0)) throw ParameterError("frame directory: fps must be positive");
  }

  double fps() const override { return fps_; }
  std::size_t frame_count() const override { return files_.size(); }
  YuvPlanes frame(std::size_t index) override {
    if (index >= files_.size()) throw DimensionError("frame directory: index out of range");
    return rgb_to_yuv(read_image(files_[index]));
  }

 private:
  std::vector<std::filesystem::path> files_;
  double fps_;
};

class MemorySource final : public FrameSource {
 public:
  MemorySource(std::vector<ImagePlane> frames, double fps) : frames_(std::move(frames)), fps_(fps) {
    if (!(fps > 0.0)) throw ParameterError("memory source: fps must be positive");
  }

  double fps() const override { return fps_; }
  std::size_t frame_count() const override { return frames_.size(); }
  YuvPlanes frame(std::size_t index) override {
    if (index >= frames_.size()) throw DimensionError("memory source: index out of range");
    const ImagePlane& y = frames_[index];
    return {y, ImagePlane(y.width, y.height, 128.0), ImagePlane(y.width, y.height, 128.0)};
  }

 private:
  std::vector<ImagePlane> frames_;
  double fps_;
};

}  // namespace

std::unique_ptr<FrameSource> memory_source(std::vector<ImagePlane> luma_frames, double fps) {
  return std::make_unique<MemorySource>(std::move(luma_frames), fps);
}

std::unique_ptr<FrameSource> open_y4m(const std::filesystem::path& path) { return std::make_unique<Y4mSource>(path); }

std::unique_ptr<FrameSource> open_frame_directory(const std::filesystem::path& dir, double fps) {
  return std::make_unique<DirectorySource>(dir, fps);
}

std::unique_ptr<FrameSource> open_video(const std::filesystem::path& path, double fallback_fps) {
  if (std::filesystem::is_directory(path)) return open_frame_directory(path, fallback_fps);
  if (path.extension() == ".y4m") return open_y4m(path);
  throw FormatError("unsupported video input (expected .y4m or a frame directory): " + path.string());
}

void write_y4m(const std::filesystem::path& path, const std::vector<ImagePlane>& luma_frames, double fps) {
  if (luma_frames.empty()) throw DimensionError("write_y4m: no frames");
  const std::size_t w = luma_frames.front().width;
  const std::size_t h = luma_frames.front().height;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  // Frame rate as a rational with millisecond precision.
  const auto num = static_cast<long long>(std::llround(fps * 1000.0));
  out << "YUV4MPEG2 W" << w << " H" << h << " F" << num << ":1000 Ip A1:1 C420jpeg\n";
  const std::size_t cw = (w + 1) / 2, ch = (h + 1) / 2;
  const std::vector<char> chroma(2 * cw * ch, static_cast<char>(128));
  std::vector<char> luma(w * h);
  for (const auto& frame : luma_frames) {
    if (frame.width != w || frame.height != h) throw DimensionError("write_y4m: frame sizes differ");
    for (std::size_t i = 0; i < w * h; ++i)
      luma[i] = static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(frame.samples[i]), 0L, 255L)));
    out << "FRAME\n";
    out.write(luma.data(), static_cast<std::streamsize>(luma.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
}

// ---------------------------------------------------------------------------
// Video features

FrameFeatureSeries extract_series(const Codebook& book, FrameSource& source, const VideoFeatureOptions& options) {
  const std::vector<std::size_t> indices =
      select_frames(source.frame_count(), source.fps(), options.frame_step, options.rate);
  FrameFeatureSeries series;
  series.fps = source.fps();
  series.rows.resize(indices.size());
  series.timestamps.resize(indices.size());
  for (std::size_t begin = 0; begin < indices.size(); begin += kFrameChunk) {
    const std::size_t end = std::min(indices.size(), begin + kFrameChunk);
    std::vector<YuvPlanes> frames;
    for (std::size_t i = begin; i < end; ++i) frames.push_back(source.frame(indices[i]));
    parallel_for(end - begin, [&](std::size_t k) {
      EncodeOptions enc = options.encode;
      enc.seed = derive_seed(options.encode.seed, "frame", indices[begin + k]);
      series.rows[begin + k] = feature_values(book, frames[k], enc);
    });
    for (std::size_t i = begin; i < end; ++i) series.timestamps[i] = static_cast<double>(indices[i]) / source.fps();
  }
  return series;
}

std::vector<double> pool(const FrameFeatureSeries& series, const VideoFeatureOptions& options) {
  if (options.pooling == Pooling::std_dev) return std_pool(series, options.segment_seconds);
  return average_pool(series);
}

FeatureVector video_features(const Codebook& book, FrameSource& source, const VideoFeatureOptions& options) {
  FeatureVector out;
  out.values = pool(extract_series(book, source, options), options);
  out.codebook_id = book.id();
  return out;
}

}  // namespace cbiqa
