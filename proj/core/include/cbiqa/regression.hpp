#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cbiqa {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-dimension affine map sending the training min to -1 and max to +1.
// Constant dimensions map to 0.
struct FeatureScaler {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t dim() const { return min.size(); }
  std::vector<double> apply(std::span<const double> features) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;  // one sample per row
};

FeatureScaler fit_scaler(const Eigen::MatrixXd& rows);

enum class KernelKind : std::uint32_t { linear = 0, rbf = 1 };

struct Kernel {
  KernelKind kind = KernelKind::rbf;
  double gamma = 0.0;  // rbf width; <= 0 means 1 / num_features at training time

  double operator()(std::span<const double> a, std::span<const double> b) const;
};

struct SvrParams {
  double c = 1.0;
  double nu = 0.5;
  Kernel kernel;
  double tolerance = 1e-3;  // KKT gap at termination
  std::size_t max_iterations = 10'000'000;
};

struct SvrModel {
  Kernel kernel;
  double c = 1.0;
  double nu = 0.5;
  double bias = 0.0;
  FeatureScaler scaler;
  std::vector<double> coefficients;  // alpha_i - alpha_i^*, one per support vector
  RowMatrix support_vectors;         // scaled features, one per row

  std::size_t num_features() const { return scaler.dim(); }
  std::size_t num_support_vectors() const { return coefficients.size(); }

  // sum_i coef_i k(sv_i, scale(x)) + bias. Throws DimensionError on length mismatch.
  double predict(std::span<const double> features) const;
  std::vector<double> predict(const Eigen::MatrixXd& rows) const;

  // "SVR1" | u32 version | u32 kernel | f64 gamma | f64 C | f64 nu | f64 bias
  // | u32 dim | dim * (f64 min, f64 max) | u32 n_sv | n_sv * (f64 coef, dim * f64)
  std::vector<std::uint8_t> serialize() const;
  static SvrModel deserialize(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static SvrModel load(const std::filesystem::path& path);
};

std::size_t model_size_bytes(const SvrModel& model);

// Raw solver state, kept for post-hoc validation of the dual solution.
struct SvrDiagnostics {
  std::vector<double> alpha;  // 2N: alpha_i then alpha_i^*
  double rho = 0.0;
  double epsilon = 0.0;       // tube width found by the solver
  double objective = 0.0;     // 0.5 a^T Q a + p^T a
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate_labels = false;
};

// nu-SVR trained with SMO on the dual
//   min 0.5 (a - a*)^T K (a - a*) - y^T (a - a*)
//   s.t. sum a = sum a* = C nu N / 2, 0 <= a, a* <= C
// using maximal-violating-pair working sets with second-order gain. Features
// are scaled with a fitted FeatureScaler first. Constant labels produce a
// model with no support vectors predicting that constant.
SvrModel train_nusvr(const Eigen::MatrixXd& features, std::span<const double> labels,
                     const SvrParams& params, SvrDiagnostics* diagnostics = nullptr);

// Dual objective of `alpha` for the scaled training rows; independent of the
// solver loop (used by validators).
double nusvr_dual_objective(const Eigen::MatrixXd& scaled_rows, std::span<const double> labels,
                            const Kernel& kernel, std::span<const double> alpha);

// Largest KKT violation of `alpha` (max over the two sign groups of
// max_{up} -G - min_{low} -G), recomputing the gradient from scratch.
double nusvr_kkt_gap(const Eigen::MatrixXd& scaled_rows, std::span<const double> labels,
                     const Kernel& kernel, double c, std::span<const double> alpha);

}  // namespace cbiqa
