#include "cbiqa/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cbiqa/error.hpp"
#include "cbiqa/rng.hpp"

namespace cbiqa {

namespace {

// Below this per-patch standard deviation the patch is treated as flat.
constexpr double kFlatPatchStd = 1e-10;

void require_non_empty(const ImagePlane& plane, const char* what) {
  if (plane.width == 0 || plane.height == 0 || plane.samples.size() != plane.width * plane.height)
    throw DimensionError(std::string(what) + ": empty or inconsistent plane");
}

}  // namespace

YuvPlanes rgb_to_yuv(const RgbImage& image) {
  if (image.width == 0 || image.height == 0 || image.rgb.size() != 3 * image.width * image.height)
    throw DimensionError("rgb_to_yuv: empty image");
  YuvPlanes out{ImagePlane(image.width, image.height), ImagePlane(image.width, image.height),
                ImagePlane(image.width, image.height)};
  for (std::size_t i = 0; i < image.width * image.height; ++i) {
    const double r = image.rgb[3 * i];
    const double g = image.rgb[3 * i + 1];
    const double b = image.rgb[3 * i + 2];
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const double u = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    const double v = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    out.y.samples[i] = std::clamp(y, 0.0, 255.0);
    out.u.samples[i] = std::clamp(u, 0.0, 255.0);
    out.v.samples[i] = std::clamp(v, 0.0, 255.0);
  }
  return out;
}

ContrastPlane log_contrast(const ImagePlane& plane) {
  require_non_empty(plane, "log_contrast");
  ContrastPlane out{ImagePlane(plane.width, plane.height)};
  double sum = 0.0;
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    // Intensities are nonnegative by construction; anything below is clamped.
    const double v = std::log(std::max(plane.samples[i], 0.0) + 1.0);
    out.plane.samples[i] = v;
    sum += v;
  }
  // Subtracting the mean of ln(I + 1) is division by the geometric mean I0.
  const double log_i0 = sum / static_cast<double>(plane.samples.size());
  for (double& v : out.plane.samples) v -= log_i0;
  return out;
}

ContrastPlane chroma_contrast(const ImagePlane& plane) {
  require_non_empty(plane, "chroma_contrast");
  ContrastPlane out{plane};
  double sum = 0.0;
  for (double v : plane.samples) sum += v;
  const double mean = sum / static_cast<double>(plane.samples.size());
  for (double& v : out.plane.samples) v -= mean;
  return out;
}

void standardize_columns(Eigen::MatrixXd& columns) {
  const double d = static_cast<double>(columns.rows());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    auto col = columns.col(j);
    const double mean = col.sum() / d;
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / d);
    if (sd < kFlatPatchStd) {
      col.setZero();
    } else {
      col /= sd;
    }
  }
}

DescriptorMatrix sample_patches(const ContrastPlane& contrast, std::size_t patch_size, std::size_t count,
                                std::uint64_t seed, PatchNormalization normalization) {
  const ImagePlane& plane = contrast.plane;
  if (patch_size == 0) throw ParameterError("sample_patches: patch size must be positive");
  if (count == 0) throw ParameterError("sample_patches: descriptor count must be positive");
  if (plane.width < patch_size || plane.height < patch_size)
    throw DimensionError("sample_patches: plane " + std::to_string(plane.width) + "x" +
                         std::to_string(plane.height) + " is smaller than the " +
                         std::to_string(patch_size) + "x" + std::to_string(patch_size) + " patch");

  const std::size_t d = patch_size * patch_size;
  DescriptorMatrix out;
  out.columns.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(count));
  out.patch_size = patch_size;
  out.normalization = normalization;

  Rng rng(seed);
  const std::size_t span_x = plane.width - patch_size + 1;
  const std::size_t span_y = plane.height - patch_size + 1;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t x0 = rng.index(span_x);
    const std::size_t y0 = rng.index(span_y);
    double* col = out.columns.col(static_cast<Eigen::Index>(j)).data();
    for (std::size_t dy = 0; dy < patch_size; ++dy) {
      const double* row = &plane.samples[(y0 + dy) * plane.width + x0];
      std::copy(row, row + patch_size, col + dy * patch_size);
    }
  }
  if (normalization == PatchNormalization::per_patch) standardize_columns(out.columns);
  return out;
}

DescriptorMatrix extract_descriptors(const ImagePlane& plane, Channel channel, std::size_t patch_size,
                                     std::size_t count, std::uint64_t seed,
                                     PatchNormalization normalization) {
  const ContrastPlane contrast = channel == Channel::luma ? log_contrast(plane) : chroma_contrast(plane);
  DescriptorMatrix out = sample_patches(contrast, patch_size, count, seed, normalization);
  out.channel = channel;
  return out;
}

DescriptorMatrix extract_descriptors(const RgbImage& image, Channel channel, std::size_t patch_size,
                                     std::size_t count, std::uint64_t seed,
                                     PatchNormalization normalization) {
  const YuvPlanes yuv = rgb_to_yuv(image);
  return extract_descriptors(channel == Channel::luma ? yuv.y : yuv.u, channel, patch_size, count, seed,
                             normalization);
}

}  // namespace cbiqa
