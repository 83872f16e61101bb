#include "cbiqa/encoder.hpp"

#include <algorithm>
#include <string>

#include "cbiqa/error.hpp"

namespace cbiqa {

namespace {

// Columns of S computed per GEMM call; the max-pool result does not depend on it.
constexpr Eigen::Index kEncodeTile = 512;

std::vector<double> collapse_signs(const std::vector<double>& values) {
  const std::size_t k = values.size() / 2;
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = std::max(values[i], values[k + i]);
  return out;
}

std::vector<double> luma_chroma_values(const Codebook& book, const DescriptorMatrix& luma,
                                       const DescriptorMatrix& chroma) {
  std::vector<double> out = collapse_signs(encode_values(book, luma));
  const std::vector<double> chroma_half = collapse_signs(encode_values(book, chroma));
  out.insert(out.end(), chroma_half.begin(), chroma_half.end());
  return out;
}

}  // namespace

std::vector<double> encode_values(const Codebook& book, const DescriptorMatrix& descriptors) {
  if (descriptors.count() == 0) throw DimensionError("encode: no descriptors");
  if (descriptors.dim() != book.dim())
    throw DimensionError("encode: descriptor dimension " + std::to_string(descriptors.dim()) +
                         " does not match codebook dimension " + std::to_string(book.dim()));
  const Eigen::Index k = book.codevectors.cols();
  if (k == 0) throw DimensionError("encode: empty codebook");

  DescriptorMatrix whitened_storage;
  const DescriptorMatrix* y = &descriptors;
  if (!descriptors.whitened) {
    whitened_storage = apply_whitening(book.whitening, descriptors);
    y = &whitened_storage;
  }

  const Eigen::Index m = y->columns.cols();
  // Starting from zero folds the relu into the running max/min.
  Eigen::VectorXd row_max = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd row_min = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd s(k, std::min(kEncodeTile, m));
  for (Eigen::Index begin = 0; begin < m; begin += kEncodeTile) {
    const Eigen::Index width = std::min(kEncodeTile, m - begin);
    auto tile = s.leftCols(width);
    tile.noalias() = book.codevectors.transpose() * y->columns.middleCols(begin, width);
    row_max = row_max.cwiseMax(tile.rowwise().maxCoeff());
    row_min = row_min.cwiseMin(tile.rowwise().minCoeff());
  }

  std::vector<double> out(static_cast<std::size_t>(2 * k));
  for (Eigen::Index i = 0; i < k; ++i) {
    out[static_cast<std::size_t>(i)] = row_max(i);
    out[static_cast<std::size_t>(k + i)] = -row_min(i);
  }
  return out;
}

FeatureVector encode(const Codebook& book, const DescriptorMatrix& descriptors) {
  return {encode_values(book, descriptors), book.id()};
}

FeatureVector encode_luma_chroma(const Codebook& book, const DescriptorMatrix& luma, const DescriptorMatrix& chroma) {
  return {luma_chroma_values(book, luma, chroma), book.id()};
}

std::vector<double> feature_values(const Codebook& book, const YuvPlanes& yuv, const EncodeOptions& options) {
  const DescriptorMatrix luma =
      extract_descriptors(yuv.y, Channel::luma, book.patch_size, options.descriptors, options.seed);
  if (!options.luma_chroma) return encode_values(book, luma);
  // Same seed: chroma patches are taken at the luma patch positions.
  const DescriptorMatrix chroma =
      extract_descriptors(yuv.u, Channel::chroma, book.patch_size, options.descriptors, options.seed);
  return luma_chroma_values(book, luma, chroma);
}

FeatureVector extract_features(const Codebook& book, const YuvPlanes& yuv, const EncodeOptions& options) {
  return {feature_values(book, yuv, options), book.id()};
}

FeatureVector extract_features(const Codebook& book, const RgbImage& image, const EncodeOptions& options) {
  return extract_features(book, rgb_to_yuv(image), options);
}

}  // namespace cbiqa
