#pragma once

#include <cstddef>
#include <vector>

namespace cbiqa {

// Single-channel raster with row-major real samples.
struct ImagePlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> samples;

  ImagePlane() = default;
  ImagePlane(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), samples(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return samples[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return samples[y * width + x]; }
  bool empty() const { return samples.empty(); }
};

// Interleaved RGB raster; samples on the 8-bit scale [0, 255] (may be fractional).
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> rgb;  // size 3 * width * height

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), rgb(3 * w * h, 0.0) {}

  double* pixel(std::size_t x, std::size_t y) { return &rgb[3 * (y * width + x)]; }
  const double* pixel(std::size_t x, std::size_t y) const { return &rgb[3 * (y * width + x)]; }
  bool empty() const { return rgb.empty(); }

  static RgbImage from_gray(const ImagePlane& gray);
};

}  // namespace cbiqa
