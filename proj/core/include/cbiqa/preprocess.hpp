#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "cbiqa/image.hpp"

namespace cbiqa {

enum class Channel { luma, chroma };

// Per-patch standardization (mean 0, std 1) is the encoding path; `raw`
// keeps the flattened values for component-wise eigen analysis.
enum class PatchNormalization { per_patch, raw };

// Zero-sum plane: log-contrast for luma, mean-removed chroma.
struct ContrastPlane {
  ImagePlane plane;
};

// d x m matrix; column j is the row-major flattened j-th n x n patch.
struct DescriptorMatrix {
  Eigen::MatrixXd columns;
  std::size_t patch_size = 0;
  Channel channel = Channel::luma;
  PatchNormalization normalization = PatchNormalization::per_patch;
  bool whitened = false;

  std::size_t dim() const { return static_cast<std::size_t>(columns.rows()); }
  std::size_t count() const { return static_cast<std::size_t>(columns.cols()); }
};

struct YuvPlanes {
  ImagePlane y;
  ImagePlane u;
  ImagePlane v;
};

// BT.601 full-range (JFIF) conversion. Y in [0, 255]; U and V centered at 128
// and clamped to [0, 255].
YuvPlanes rgb_to_yuv(const RgbImage& image);

// phi(x) = ln((I(x) + 1) / I0), I0 the geometric mean of I + 1, so sum(phi) = 0.
ContrastPlane log_contrast(const ImagePlane& plane);

// Chroma planes are signed around 128 and skip the log: phi(x) = U(x) - mean(U).
ContrastPlane chroma_contrast(const ImagePlane& plane);

// Samples `count` n x n patches at uniform random top-left positions (with
// replacement). A pure function of its arguments. Zero-variance patches become
// zero columns under per-patch normalization.
DescriptorMatrix sample_patches(const ContrastPlane& plane, std::size_t patch_size,
                                std::size_t count, std::uint64_t seed,
                                PatchNormalization normalization = PatchNormalization::per_patch);

// In-place per-column standardization used by sample_patches.
void standardize_columns(Eigen::MatrixXd& columns);

// rgb -> plane for `channel` -> contrast -> sample_patches.
DescriptorMatrix extract_descriptors(const RgbImage& image, Channel channel,
                                     std::size_t patch_size, std::size_t count,
                                     std::uint64_t seed,
                                     PatchNormalization normalization = PatchNormalization::per_patch);

// Same, starting from an already converted luma or chroma plane.
DescriptorMatrix extract_descriptors(const ImagePlane& plane, Channel channel,
                                     std::size_t patch_size, std::size_t count,
                                     std::uint64_t seed,
                                     PatchNormalization normalization = PatchNormalization::per_patch);

}  // namespace cbiqa
