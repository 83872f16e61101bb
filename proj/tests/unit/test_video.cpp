#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cbiqa/bench.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/rng.hpp"
#include "cbiqa/video.hpp"

using namespace cbiqa;

namespace {

FrameFeatureSeries series_of(const std::vector<std::vector<double>>& rows, double fps = 30.0) {
  FrameFeatureSeries s;
  s.fps = fps;
  s.rows = rows;
  for (std::size_t i = 0; i < rows.size(); ++i) s.timestamps.push_back(static_cast<double>(i) / fps);
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cbiqa_test_" + name);
}

}  // namespace

TEST(Sampling, Examples) {
  EXPECT_EQ(sample_frames(300, 30.0, SamplingRate::fps(30.0)).size(), 300u);
  EXPECT_EQ(sample_frames(300, 30.0, SamplingRate::all()).size(), 300u);
  EXPECT_EQ(sample_frames(300, 30.0, SamplingRate::every_video()), std::vector<std::size_t>{0});
  const auto one = sample_frames(300, 30.0, SamplingRate::fps(1.0));
  ASSERT_EQ(one.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(one[i], 30 * i);
  EXPECT_EQ(sample_frames(300, 30.0, SamplingRate::fps(3.0)).size(), 30u);
  EXPECT_EQ(sample_frames(299, 29.97, SamplingRate::fps(1.0)).size(), 10u);
}

TEST(Sampling, EveryNthAndSelect) {
  EXPECT_EQ(every_nth_frame(7, 3), (std::vector<std::size_t>{0, 3, 6}));
  EXPECT_EQ(every_nth_frame(4, 1).size(), 4u);
  EXPECT_THROW(every_nth_frame(4, 0), ParameterError);
  // Step first, then one frame per second of the survivors.
  const auto sel = select_frames(300, 30.0, 4, SamplingRate::fps(1.0));
  ASSERT_EQ(sel.size(), 10u);
  for (std::size_t i : sel) EXPECT_EQ(i % 4, 0u);
  EXPECT_THROW(sample_frames(0, 30.0, SamplingRate::all()), DimensionError);
}

TEST(AveragePool, Examples) {
  const std::vector<double> a{1.0, 2.0, 3.0}, b{3.0, 6.0, -1.0};
  EXPECT_EQ(average_pool(series_of({a, a, a})), a);
  EXPECT_EQ(average_pool(series_of({a, b})), (std::vector<double>{2.0, 4.0, 1.0}));
  EXPECT_THROW(average_pool(series_of({})), DimensionError);
  EXPECT_THROW(average_pool(series_of({a, {1.0}})), DimensionError);
}

TEST(AveragePool, PermutationInvariant) {
  Rng rng(31);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t frames = 1 + rng.index(12), dim = 1 + rng.index(6);
    std::vector<std::vector<double>> rows(frames, std::vector<double>(dim));
    for (auto& r : rows)
      for (double& v : r) v = rng.uniform(-100, 100);
    auto shuffled = rows;
    for (std::size_t i = frames; i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    ASSERT_EQ(average_pool(series_of(rows)), average_pool(series_of(shuffled)));
  }
}

TEST(StdPool, ConstantVideoHasZeroStd) {
  const std::vector<double> f{0.1, 0.7, 3.3};
  const std::vector<double> p = std_pool(series_of(std::vector<std::vector<double>>(95, f)), 1.0);
  ASSERT_EQ(p.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(p[i], f[i]);
    EXPECT_EQ(p[3 + i], 0.0);
  }
}

TEST(StdPool, TwoFrameSegment) {
  const std::vector<double> a{1.0, 5.0}, b{3.0, -1.0};
  const std::vector<double> p = std_pool(series_of({a, b}), 1.0);
  EXPECT_EQ(p, (std::vector<double>{2.0, 2.0, 1.0, 3.0}));
}

TEST(StdPool, SegmentsAveraged) {
  // Two one-second segments at 2 fps: {0, 2} and {10, 10}.
  const std::vector<double> p = std_pool(series_of({{0.0}, {2.0}, {10.0}, {10.0}}, 2.0), 1.0);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0], 5.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_THROW(std_pool(series_of({{0.0}}), 0.0), ParameterError);
}

TEST(SeriesValidation, NonIncreasingTimestamps) {
  FrameFeatureSeries s = series_of({{1.0}, {2.0}});
  s.timestamps[1] = s.timestamps[0];
  EXPECT_THROW(s.validate(), ParameterError);
}

TEST(Bitrate, MultiplierLimits) {
  EXPECT_DOUBLE_EQ(bitrate_multiplier(16.0, 3.0, 4.0), 1.5);  // b = k^2 gives c / 2
  EXPECT_EQ(bitrate_multiplier(0.0, 3.0, 4.0), 0.0);
  EXPECT_NEAR(bitrate_multiplier(1e16, 3.0, 4.0), 3.0, 1e-6);
  EXPECT_DOUBLE_EQ(bitrate_rescale(50.0, 16.0, 3.0, 4.0), 75.0);
  EXPECT_THROW(bitrate_multiplier(-1.0, 1.0, 1.0), ParameterError);
  EXPECT_THROW(bitrate_multiplier(1.0, 0.0, 1.0), ParameterError);
}

TEST(Bitrate, CalibrationMapsIntoRange) {
  const std::vector<double> scores{40.0, 70.0, 55.0, 90.0}, rates{400.0, 900.0, 1600.0, 2500.0};
  const RescaleParams p = calibrate_rescale(scores, rates);
  EXPECT_DOUBLE_EQ(p.k, std::sqrt(1250.0));
  double top = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double r = bitrate_rescale(scores[i], rates[i], p.c, p.k);
    EXPECT_GE(r, 0.0);
    top = std::max(top, r);
  }
  EXPECT_NEAR(top, 100.0, 1e-9);
  EXPECT_THROW(calibrate_rescale(std::vector<double>{-1.0}, std::vector<double>{1.0}), ParameterError);
}

TEST(Y4m, RoundTrip) {
  Rng rng(3);
  std::vector<ImagePlane> frames;
  for (int f = 0; f < 4; ++f) {
    ImagePlane p(13, 9);
    for (double& v : p.samples) v = static_cast<double>(rng.index(256));
    frames.push_back(p);
  }
  const auto path = temp_path("roundtrip.y4m");
  write_y4m(path, frames, 25.0);
  auto src = open_y4m(path);
  EXPECT_DOUBLE_EQ(src->fps(), 25.0);
  ASSERT_EQ(src->frame_count(), 4u);
  for (std::size_t f = 0; f < 4; ++f) {
    const YuvPlanes yuv = src->frame(f);
    EXPECT_EQ(yuv.y.samples, frames[f].samples);
    EXPECT_EQ(yuv.u.width, 13u);
    for (double v : yuv.u.samples) EXPECT_EQ(v, 128.0);
  }
  std::filesystem::remove(path);
}

TEST(Y4m, BadHeader) {
  const auto path = temp_path("bad.y4m");
  {
    std::ofstream out(path);
    out << "NOTY4M W2 H2\n";
  }
  EXPECT_THROW(open_y4m(path), FormatError);
  std::filesystem::remove(path);
}

TEST(VideoFeatures, SingleFramePoolsToImageFeatures) {
  const Codebook book = random_codebook(4, 8, 1);
  ImagePlane frame(32, 32);
  Rng rng(5);
  for (double& v : frame.samples) v = rng.uniform(0, 255);
  VideoFeatureOptions o;
  o.encode.descriptors = 64;
  auto src = memory_source({frame, frame, frame}, 30.0);
  const FeatureVector avg = video_features(book, *src, o);
  EXPECT_EQ(avg.size(), 16u);
  o.pooling = Pooling::std_dev;
  auto src2 = memory_source({frame, frame, frame}, 30.0);
  o.rate = SamplingRate::all();
  const FeatureVector sd = video_features(book, *src2, o);
  ASSERT_EQ(sd.size(), 32u);
  for (std::size_t i = 16; i < 32; ++i) EXPECT_GE(sd.values[i], 0.0);
}
