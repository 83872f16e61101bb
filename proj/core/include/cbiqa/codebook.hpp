#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cbiqa/preprocess.hpp"

namespace cbiqa {

enum class WhiteningKind : std::uint32_t { none = 0, zca = 1, fourier = 2 };

struct WhiteningTransform {
  WhiteningKind kind = WhiteningKind::none;
  std::size_t patch_size = 0;
  Eigen::MatrixXd matrix;           // d x d; identity unless kind == zca
  std::vector<double> eigenvalues;  // descending; empty when not computed

  std::size_t dim() const { return patch_size * patch_size; }
  static WhiteningTransform identity(std::size_t patch_size, WhiteningKind kind = WhiteningKind::none);
};

// ZCA: C = X X^T / m = U D U^T and W = U max(D, eps)^(-1/2) U^T with
// eps = 1e-8 trace(D) / d. Throws FormatError on non-finite input.
WhiteningTransform compute_zca(const DescriptorMatrix& descriptors);

// Number of eigenvalues compute_zca clamped to its floor (rank deficiency).
std::size_t count_floored_eigenvalues(const WhiteningTransform& transform);

DescriptorMatrix apply_whitening(const WhiteningTransform& transform, const DescriptorMatrix& descriptors);

// Divides the 2-D DFT of an n x n patch by the mean modulus of its spectrum
// and transforms back. A zero patch is returned unchanged.
Eigen::VectorXd fourier_whiten(const Eigen::Ref<const Eigen::VectorXd>& patch, std::size_t patch_size);

struct KMeansOptions {
  std::size_t clusters = 1;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 300;
};

struct KMeansResult {
  Eigen::MatrixXd centers;                // d x K
  std::vector<std::size_t> assignment;    // length m
  std::vector<double> objective_history;  // objective after every assignment step
  std::size_t iterations = 0;
  bool converged = false;                 // assignment reached a fixpoint
};

// k-means++ seeding followed by Lloyd iterations. Ties resolve to the lowest
// center index; empty clusters are re-seeded with the point farthest from its
// center. Throws ParameterError when m < K or K == 0.
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

// Sum of squared distances from each point to its nearest center.
double kmeans_objective(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers);

struct Codebook {
  std::size_t patch_size = 0;
  Eigen::MatrixXd codevectors;  // d x K
  WhiteningTransform whitening;
  std::string provenance;

  std::size_t dim() const { return static_cast<std::size_t>(codevectors.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(codevectors.cols()); }

  // Serialized layout (little-endian):
  //   "CBK1" | u32 d | u32 K | u32 n | u32 whitening kind
  //   | d*d f64 W (row-major) | d*K f64 O (column by column)
  //   | u32 byte length | provenance UTF-8
  std::vector<std::uint8_t> serialize() const;
  static Codebook deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static Codebook load(const std::filesystem::path& path);

  // FNV-1a hash of the serialized bytes, hex encoded.
  std::string id() const;
};

struct CodebookParams {
  Channel channel = Channel::luma;
  std::size_t patch_size = 8;
  std::size_t patches_per_image = 512;
  std::size_t codevectors = 256;
  WhiteningKind whitening = WhiteningKind::zca;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 300;
  std::string source_label;  // goes into provenance
};

// Descriptors of all planes, whitened jointly, clustered. Planes are luma or
// chroma planes matching params.channel.
Codebook build_codebook(const std::vector<ImagePlane>& planes, const CodebookParams& params);

// File-based variant. Unreadable files are skipped with a warning; throws
// IoError when none can be read.
Codebook build_codebook(const std::vector<std::filesystem::path>& images, const CodebookParams& params);

// Aggregated descriptors for a set of planes (sub-stream seed per plane index).
DescriptorMatrix collect_descriptors(const std::vector<ImagePlane>& planes, Channel channel,
                                     std::size_t patch_size, std::size_t per_image,
                                     std::uint64_t seed, PatchNormalization normalization);

// Descending eigenvalues of the correlation (standardize_components = true)
// or second-moment matrix of the descriptor components.
std::vector<double> eigen_spectrum(const DescriptorMatrix& descriptors, bool standardize_components = true);

}  // namespace cbiqa
