#pragma once

#include <string>
#include <vector>

#include "cbiqa/codebook.hpp"
#include "cbiqa/preprocess.hpp"

namespace cbiqa {

// Layout: [max_j relu(s_ij) for i < K | max_j relu(-s_ij) for i < K].
struct FeatureVector {
  std::vector<double> values;
  std::string codebook_id;

  std::size_t size() const { return values.size(); }
};

// S = O^T Y, then row-wise max of the positive and negative parts.
// Unwhitened descriptors are whitened with the codebook transform first.
FeatureVector encode(const Codebook& book, const DescriptorMatrix& descriptors);

// encode() without the codebook id (hashing the codebook costs a pass over it).
std::vector<double> encode_values(const Codebook& book, const DescriptorMatrix& descriptors);

// Joint luma + chroma features with the luma codebook. Each channel's (f_i,
// f_{K+i}) pair collapses to its max, giving [luma K | chroma K] = 2K values.
FeatureVector encode_luma_chroma(const Codebook& book, const DescriptorMatrix& luma,
                                 const DescriptorMatrix& chroma);

struct EncodeOptions {
  std::size_t descriptors = 2048;
  std::uint64_t seed = 0;
  bool luma_chroma = false;
};

// Descriptor extraction plus encoding for one image.
FeatureVector extract_features(const Codebook& book, const RgbImage& image, const EncodeOptions& options);
FeatureVector extract_features(const Codebook& book, const YuvPlanes& planes, const EncodeOptions& options);
std::vector<double> feature_values(const Codebook& book, const YuvPlanes& planes, const EncodeOptions& options);

}  // namespace cbiqa
