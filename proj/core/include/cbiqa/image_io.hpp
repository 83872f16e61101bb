#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cbiqa/image.hpp"

namespace cbiqa {

// Reads PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette) and binary
// PPM/PGM (P6/P5). Grey inputs are replicated into all three channels.
RgbImage read_image(const std::filesystem::path& path);

// Writes the plane rounded and clamped to 8 bits. Format is chosen by the
// extension: .png, .pgm or .ppm (greyscale replicated).
void write_image(const std::filesystem::path& path, const ImagePlane& plane);
void write_image(const std::filesystem::path& path, const RgbImage& image);

struct YuvFrame {
  ImagePlane y;
  ImagePlane u;  // upsampled to luma resolution
  ImagePlane v;
};

// Raw planar 8-bit YUV 4:2:0 (I420) file; frame `index` of a headerless stream.
YuvFrame read_raw_yuv420(const std::filesystem::path& path, std::size_t width,
                         std::size_t height, std::size_t index = 0);

// Sorted list of files with image extensions (.png, .ppm, .pgm) in `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace cbiqa
