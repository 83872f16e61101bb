#include "cbiqa/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "binary_io.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/image_io.hpp"
#include "cbiqa/log.hpp"
#include "cbiqa/parallel.hpp"
#include "cbiqa/rng.hpp"

namespace cbiqa {

namespace {

constexpr double kEigenFloorScale = 1e-8;
constexpr std::size_t kAssignTile = 2048;

double eigen_floor(const std::vector<double>& eigenvalues) {
  if (eigenvalues.empty()) return 0.0;
  const double trace = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  return kEigenFloorScale * std::max(trace, 0.0) / static_cast<double>(eigenvalues.size());
}

// Eigen-decomposition of a symmetric matrix with eigenpairs sorted descending.
void sorted_eigensystem(const Eigen::MatrixXd& symmetric, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  // Eigen returns ascending order.
  values = solver.eigenvalues().reverse();
  vectors = solver.eigenvectors().rowwise().reverse();
}

}  // namespace

WhiteningTransform WhiteningTransform::identity(std::size_t patch_size, WhiteningKind kind) {
  WhiteningTransform t;
  t.kind = kind;
  t.patch_size = patch_size;
  const auto d = static_cast<Eigen::Index>(patch_size * patch_size);
  t.matrix = Eigen::MatrixXd::Identity(d, d);
  return t;
}

WhiteningTransform compute_zca(const DescriptorMatrix& descriptors) {
  const Eigen::MatrixXd& x = descriptors.columns;
  if (x.rows() == 0 || x.cols() == 0) throw DimensionError("compute_zca: empty descriptor matrix");
  if (!x.allFinite()) throw FormatError("compute_zca: non-finite descriptor values");
  if (descriptors.count() < descriptors.dim())
    log::warn("compute_zca: " + std::to_string(descriptors.count()) + " descriptors for dimension " +
              std::to_string(descriptors.dim()) + "; covariance is rank deficient, eigenvalue floor applies");

  const Eigen::MatrixXd cov = (x * x.transpose()) / static_cast<double>(x.cols());
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  sorted_eigensystem(cov, values, vectors);

  WhiteningTransform t;
  t.kind = WhiteningKind::zca;
  t.patch_size = descriptors.patch_size;
  t.eigenvalues.assign(values.data(), values.data() + values.size());
  const double floor = eigen_floor(t.eigenvalues);
  Eigen::VectorXd inv_sqrt(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) inv_sqrt(i) = 1.0 / std::sqrt(std::max(values(i), floor));
  t.matrix = vectors * inv_sqrt.asDiagonal() * vectors.transpose();
  return t;
}

std::size_t count_floored_eigenvalues(const WhiteningTransform& transform) {
  const double floor = eigen_floor(transform.eigenvalues);
  return static_cast<std::size_t>(
      std::count_if(transform.eigenvalues.begin(), transform.eigenvalues.end(), [&](double v) { return v < floor; }));
}

Eigen::VectorXd fourier_whiten(const Eigen::Ref<const Eigen::VectorXd>& patch, std::size_t patch_size) {
  const auto n = static_cast<Eigen::Index>(patch_size);
  if (patch_size == 0 || patch.size() != n * n) throw DimensionError("fourier_whiten: patch is not n x n");
  using Complex = std::complex<double>;
  Eigen::MatrixXcd dft(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k)
      dft(j, k) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n));

  // Row-major flattening: element (r, c) is patch[r * n + c].
  Eigen::MatrixXcd spatial(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) spatial(r, c) = Complex(patch(r * n + c), 0.0);

  const Eigen::MatrixXcd spectrum = dft * spatial * dft;
  const double mean_modulus = spectrum.cwiseAbs().sum() / static_cast<double>(n * n);
  if (!(mean_modulus > 0.0)) return patch;

  const Eigen::MatrixXcd flattened = spectrum / mean_modulus;
  const Eigen::MatrixXcd back = dft.conjugate() * flattened * dft.conjugate() / static_cast<double>(n * n);
  Eigen::VectorXd out(n * n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r * n + c) = back(r, c).real();
  return out;
}

DescriptorMatrix apply_whitening(const WhiteningTransform& transform, const DescriptorMatrix& descriptors) {
  if (descriptors.dim() != transform.dim())
    throw DimensionError("apply_whitening: descriptor dimension " + std::to_string(descriptors.dim()) +
                         " does not match transform dimension " + std::to_string(transform.dim()));
  DescriptorMatrix out;
  out.patch_size = descriptors.patch_size;
  out.channel = descriptors.channel;
  out.normalization = descriptors.normalization;
  out.whitened = true;
  switch (transform.kind) {
    case WhiteningKind::none:
      out.columns = descriptors.columns;
      break;
    case WhiteningKind::zca:
      out.columns.noalias() = transform.matrix * descriptors.columns;
      break;
    case WhiteningKind::fourier:
      out.columns.resize(descriptors.columns.rows(), descriptors.columns.cols());
      for (Eigen::Index j = 0; j < descriptors.columns.cols(); ++j)
        out.columns.col(j) = fourier_whiten(descriptors.columns.col(j), transform.patch_size);
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

struct Assignment {
  std::vector<std::size_t> index;
  std::vector<double> distance;  // squared
  double objective = 0.0;
};

Assignment assign_points(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers) {
  const Eigen::Index m = points.cols();
  const Eigen::Index k = centers.cols();
  const Eigen::VectorXd center_norms = centers.colwise().squaredNorm().transpose();
  Assignment out;
  out.index.assign(static_cast<std::size_t>(m), 0);
  out.distance.assign(static_cast<std::size_t>(m), 0.0);
  const std::size_t tiles = (static_cast<std::size_t>(m) + kAssignTile - 1) / kAssignTile;
  parallel_for(tiles, [&](std::size_t t) {
    const Eigen::Index begin = static_cast<Eigen::Index>(t * kAssignTile);
    const Eigen::Index width = std::min<Eigen::Index>(static_cast<Eigen::Index>(kAssignTile), m - begin);
    const auto block = points.middleCols(begin, width);
    Eigen::MatrixXd cross(k, width);
    cross.noalias() = centers.transpose() * block;
    for (Eigen::Index j = 0; j < width; ++j) {
      Eigen::Index best = 0;
      double best_value = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double v = center_norms(c) - 2.0 * cross(c, j);
        if (v < best_value) {
          best_value = v;
          best = c;
        }
      }
      const auto idx = static_cast<std::size_t>(begin + j);
      out.index[idx] = static_cast<std::size_t>(best);
      out.distance[idx] = std::max(0.0, best_value + block.col(j).squaredNorm());
    }
  });
  for (double v : out.distance) out.objective += v;
  return out;
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, std::size_t k, Rng& rng) {
  const auto m = static_cast<std::size_t>(points.cols());
  Eigen::MatrixXd centers(points.rows(), static_cast<Eigen::Index>(k));
  std::vector<bool> chosen(m, false);
  std::size_t first = rng.index(m);
  centers.col(0) = points.col(static_cast<Eigen::Index>(first));
  chosen[first] = true;
  std::vector<double> d2(m);
  for (std::size_t i = 0; i < m; ++i)
    d2[i] = (points.col(static_cast<Eigen::Index>(i)) - centers.col(0)).squaredNorm();

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = m;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == m) {
      // Every point coincides with a center: take the first unused one.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    chosen[pick] = true;
    centers.col(static_cast<Eigen::Index>(c)) = points.col(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < m; ++i) {
      const double v = (points.col(static_cast<Eigen::Index>(i)) - centers.col(static_cast<Eigen::Index>(c))).squaredNorm();
      d2[i] = std::min(d2[i], v);
    }
  }
  return centers;
}

}  // namespace

double kmeans_objective(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.cols(); ++c) best = std::min(best, (points.col(j) - centers.col(c)).squaredNorm());
    total += best;
  }
  return total;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  const auto m = static_cast<std::size_t>(points.cols());
  const std::size_t k = options.clusters;
  if (k == 0) throw ParameterError("kmeans: K must be at least 1");
  if (m < k) throw ParameterError("kmeans: " + std::to_string(m) + " points cannot form " + std::to_string(k) + " clusters");
  if (!points.allFinite()) throw FormatError("kmeans: non-finite input");

  Rng rng(options.seed);
  KMeansResult result;
  result.centers = kmeans_plus_plus(points, k, rng);
  Assignment current = assign_points(points, result.centers);
  result.objective_history.push_back(current.objective);

  const Eigen::Index d = points.rows();
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(k));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      sums.col(static_cast<Eigen::Index>(current.index[i])) += points.col(static_cast<Eigen::Index>(i));
      ++counts[current.index[i]];
    }
    std::vector<double> distance = current.distance;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        result.centers.col(static_cast<Eigen::Index>(c)) = sums.col(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its own center.
      const auto far = static_cast<std::size_t>(std::max_element(distance.begin(), distance.end()) - distance.begin());
      result.centers.col(static_cast<Eigen::Index>(c)) = points.col(static_cast<Eigen::Index>(far));
      distance[far] = -1.0;
    }

    Assignment next = assign_points(points, result.centers);
    result.objective_history.push_back(next.objective);
    ++result.iterations;
    const bool fixpoint = next.index == current.index;
    current = std::move(next);
    if (fixpoint) {
      result.converged = true;
      break;
    }
  }
  result.assignment = std::move(current.index);
  return result;
}

// ---------------------------------------------------------------------------
// Codebook persistence

std::vector<std::uint8_t> Codebook::serialize() const {
  const std::size_t d = dim();
  if (whitening.matrix.rows() != static_cast<Eigen::Index>(d) || whitening.matrix.cols() != static_cast<Eigen::Index>(d))
    throw DimensionError("codebook: whitening matrix does not match codevector dimension");
  detail::ByteWriter w;
  w.magic("CBK1");
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(size()));
  w.u32(static_cast<std::uint32_t>(patch_size));
  w.u32(static_cast<std::uint32_t>(whitening.kind));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) w.f64(whitening.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  for (Eigen::Index k = 0; k < codevectors.cols(); ++k)
    for (Eigen::Index r = 0; r < codevectors.rows(); ++r) w.f64(codevectors(r, k));
  w.text(provenance);
  return w.take();
}

Codebook Codebook::deserialize(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "codebook");
  r.expect_magic("CBK1");
  const std::uint32_t d = r.u32();
  const std::uint32_t k = r.u32();
  const std::uint32_t n = r.u32();
  const std::uint32_t kind = r.u32();
  if (d == 0 || k == 0 || std::uint64_t{n} * n != d) throw FormatError("codebook: inconsistent header");
  if (kind > static_cast<std::uint32_t>(WhiteningKind::fourier)) throw FormatError("codebook: unknown whitening kind");
  if (r.remaining() < (std::uint64_t{d} * d + std::uint64_t{d} * k) * 8) throw FormatError("codebook: truncated data");
  Codebook book;
  book.patch_size = n;
  book.whitening.kind = static_cast<WhiteningKind>(kind);
  book.whitening.patch_size = n;
  book.whitening.matrix.resize(d, d);
  for (std::uint32_t row = 0; row < d; ++row)
    for (std::uint32_t col = 0; col < d; ++col) book.whitening.matrix(row, col) = r.f64();
  book.codevectors.resize(d, k);
  for (std::uint32_t c = 0; c < k; ++c)
    for (std::uint32_t row = 0; row < d; ++row) book.codevectors(row, c) = r.f64();
  book.provenance = r.text();
  if (r.remaining() != 0) throw FormatError("codebook: trailing bytes");
  if (!book.codevectors.allFinite() || !book.whitening.matrix.allFinite()) throw FormatError("codebook: non-finite values");
  return book;
}

void Codebook::save(const std::filesystem::path& path) const { detail::write_file_bytes(path, serialize()); }

Codebook Codebook::load(const std::filesystem::path& path) { return deserialize(detail::read_file_bytes(path)); }

std::string Codebook::id() const {
  const auto bytes = serialize();
  const std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Building

namespace {

const char* whitening_name(WhiteningKind kind) {
  switch (kind) {
    case WhiteningKind::none: return "none";
    case WhiteningKind::zca: return "zca";
    case WhiteningKind::fourier: return "fourier";
  }
  return "?";
}

}  // namespace

DescriptorMatrix collect_descriptors(const std::vector<ImagePlane>& planes, Channel channel, std::size_t patch_size,
                                     std::size_t per_image, std::uint64_t seed, PatchNormalization normalization) {
  if (planes.empty()) throw DimensionError("collect_descriptors: no images");
  std::vector<DescriptorMatrix> parts(planes.size());
  parallel_for(planes.size(), [&](std::size_t i) {
    parts[i] = extract_descriptors(planes[i], channel, patch_size, per_image, derive_seed(seed, "patches", i), normalization);
  });
  DescriptorMatrix all;
  all.patch_size = patch_size;
  all.channel = channel;
  all.normalization = normalization;
  const auto d = static_cast<Eigen::Index>(patch_size * patch_size);
  all.columns.resize(d, static_cast<Eigen::Index>(planes.size() * per_image));
  for (std::size_t i = 0; i < parts.size(); ++i)
    all.columns.middleCols(static_cast<Eigen::Index>(i * per_image), static_cast<Eigen::Index>(per_image)) = parts[i].columns;
  return all;
}

Codebook build_codebook(const std::vector<ImagePlane>& planes, const CodebookParams& params) {
  if (params.codevectors == 0) throw ParameterError("build_codebook: K must be at least 1");
  const DescriptorMatrix descriptors = collect_descriptors(planes, params.channel, params.patch_size,
                                                           params.patches_per_image, params.seed,
                                                           PatchNormalization::per_patch);
  if (descriptors.count() < params.codevectors)
    throw ParameterError("build_codebook: " + std::to_string(descriptors.count()) + " descriptors for K = " +
                         std::to_string(params.codevectors));

  Codebook book;
  book.patch_size = params.patch_size;
  book.whitening = params.whitening == WhiteningKind::zca ? compute_zca(descriptors)
                                                         : WhiteningTransform::identity(params.patch_size, params.whitening);
  const DescriptorMatrix whitened = apply_whitening(book.whitening, descriptors);
  const KMeansResult clusters =
      kmeans(whitened.columns, {params.codevectors, derive_seed(params.seed, "kmeans"), params.max_iterations});
  book.codevectors = clusters.centers;

  std::ostringstream prov;
  prov << "source=" << (params.source_label.empty() ? "planes" : params.source_label) << "; images=" << planes.size()
       << "; channel=" << (params.channel == Channel::luma ? "luma" : "chroma") << "; patch=" << params.patch_size
       << "; per_image=" << params.patches_per_image << "; k=" << params.codevectors
       << "; whiten=" << whitening_name(params.whitening) << "; seed=" << params.seed
       << "; kmeans_iterations=" << clusters.iterations << (clusters.converged ? " (converged)" : " (max reached)")
       << "; codevectors not L2-normalized";
  book.provenance = prov.str();
  return book;
}

Codebook build_codebook(const std::vector<std::filesystem::path>& images, const CodebookParams& params) {
  std::vector<ImagePlane> planes;
  planes.reserve(images.size());
  for (const auto& path : images) {
    try {
      const YuvPlanes yuv = rgb_to_yuv(read_image(path));
      planes.push_back(params.channel == Channel::luma ? yuv.y : yuv.u);
    } catch (const Error& e) {
      log::warn("skipping " + path.string() + ": " + e.what());
    }
  }
  if (planes.empty()) throw IoError("build_codebook: none of the " + std::to_string(images.size()) + " images could be read");
  return build_codebook(planes, params);
}

std::vector<double> eigen_spectrum(const DescriptorMatrix& descriptors, bool standardize_components) {
  if (descriptors.count() == 0 || descriptors.dim() == 0) throw DimensionError("eigen_spectrum: empty descriptor matrix");
  Eigen::MatrixXd x = descriptors.columns;
  const double m = static_cast<double>(x.cols());
  if (standardize_components) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      auto row = x.row(r);
      const double mean = row.sum() / m;
      row.array() -= mean;
      const double sd = std::max(std::sqrt(row.squaredNorm() / m), 1e-12);
      row /= sd;
    }
  }
  const Eigen::MatrixXd corr = (x * x.transpose()) / m;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  sorted_eigensystem(corr, values, vectors);
  return {values.data(), values.data() + values.size()};
}

}  // namespace cbiqa
