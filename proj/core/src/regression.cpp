#include "cbiqa/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "cbiqa/error.hpp"

namespace cbiqa {

// ---------------------------------------------------------------------------
// Scaling

FeatureScaler fit_scaler(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw DimensionError("fit_scaler: no training vectors");
  FeatureScaler s;
  s.min.resize(static_cast<std::size_t>(rows.cols()));
  s.max.resize(static_cast<std::size_t>(rows.cols()));
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    s.min[static_cast<std::size_t>(c)] = rows.col(c).minCoeff();
    s.max[static_cast<std::size_t>(c)] = rows.col(c).maxCoeff();
  }
  return s;
}

namespace {

inline double scale_value(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return 2.0 * (v - lo) / (hi - lo) - 1.0;
}

}  // namespace

std::vector<double> FeatureScaler::apply(std::span<const double> features) const {
  if (features.size() != dim())
    throw DimensionError("scaler: expected " + std::to_string(dim()) + " features, got " + std::to_string(features.size()));
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) out[i] = scale_value(features[i], min[i], max[i]);
  return out;
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != dim())
    throw DimensionError("scaler: expected " + std::to_string(dim()) + " features, got " + std::to_string(rows.cols()));
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) out(r, c) = scale_value(rows(r, c), min[i], max[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  const Eigen::Map<const Eigen::VectorXd> va(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> vb(b.data(), static_cast<Eigen::Index>(b.size()));
  if (kind == KernelKind::linear) return va.dot(vb);
  return std::exp(-gamma * (va - vb).squaredNorm());
}

namespace {

Kernel resolved_kernel(Kernel kernel, std::size_t features) {
  if (kernel.kind == KernelKind::rbf && !(kernel.gamma > 0.0)) kernel.gamma = 1.0 / static_cast<double>(features);
  return kernel;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const Kernel& kernel) {
  Eigen::MatrixXd gram = x * x.transpose();
  if (kernel.kind == KernelKind::linear) return gram;
  const Eigen::VectorXd norms = gram.diagonal();
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
      const double d2 = i == j ? 0.0 : std::max(0.0, norms(i) + norms(j) - 2.0 * gram(i, j));
      gram(i, j) = std::exp(-kernel.gamma * d2);
    }
  }
  return gram;
}

void check_training_inputs(const Eigen::MatrixXd& features, std::span<const double> labels) {
  if (features.rows() < 2) throw ParameterError("train_nusvr: need at least 2 training vectors");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DimensionError("train_nusvr: " + std::to_string(features.rows()) + " feature rows but " +
                         std::to_string(labels.size()) + " labels");
  if (features.cols() == 0) throw DimensionError("train_nusvr: empty feature vectors");
  if (!features.allFinite()) throw FormatError("train_nusvr: non-finite features");
  for (double v : labels)
    if (!std::isfinite(v)) throw FormatError("train_nusvr: non-finite label");
}

// SMO for the nu-SVR dual in the doubled variable space t = 0..2N-1:
// alpha_t for t < N (sign +1), alpha*_{t-N} for t >= N (sign -1),
// Q_ts = sign_t sign_s K(t mod N, s mod N). Each sign group keeps its sum
// fixed, so working pairs are always taken within one group.
class NuSvrSolver {
 public:
  NuSvrSolver(const Eigen::MatrixXd& kernel, std::span<const double> labels, double c, double nu)
      : k_(kernel), n_(labels.size()), c_(c), alpha_(2 * n_), grad_(2 * n_) {
    double remaining = c * nu * static_cast<double>(n_) / 2.0;
    for (std::size_t i = 0; i < n_; ++i) {
      alpha_[i] = alpha_[i + n_] = std::min(remaining, c);
      remaining -= alpha_[i];
    }
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const double label = labels[t % n_];
      grad_[t] = t < n_ ? -label : label;
    }
    for (std::size_t s = 0; s < 2 * n_; ++s) {
      if (alpha_[s] == 0.0) continue;
      for (std::size_t t = 0; t < 2 * n_; ++t) grad_[t] += q(t, s) * alpha_[s];
    }
  }

  // Returns true when the KKT gap fell below `tolerance`.
  bool run(double tolerance, std::size_t max_iterations, std::size_t& iterations) {
    for (iterations = 0; iterations < max_iterations; ++iterations) {
      std::size_t i = 0, j = 0;
      if (!select_pair(tolerance, i, j)) return true;
      update_pair(i, j);
    }
    return false;
  }

  void bias_terms(double& rho, double& r) const {
    double r_group[2];
    for (int g = 0; g < 2; ++g) {
      double ub = std::numeric_limits<double>::infinity();
      double lb = -std::numeric_limits<double>::infinity();
      double sum_free = 0.0;
      std::size_t free = 0;
      for (std::size_t t = g * n_; t < (g + 1) * n_; ++t) {
        if (at_upper(t)) {
          lb = std::max(lb, grad_[t]);
        } else if (at_lower(t)) {
          ub = std::min(ub, grad_[t]);
        } else {
          ++free;
          sum_free += grad_[t];
        }
      }
      r_group[g] = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
    }
    r = (r_group[0] + r_group[1]) / 2.0;
    rho = (r_group[0] - r_group[1]) / 2.0;
  }

  const std::vector<double>& alpha() const { return alpha_; }

 private:
  static constexpr double kTau = 1e-12;

  double sign(std::size_t t) const { return t < n_ ? 1.0 : -1.0; }
  double q(std::size_t t, std::size_t s) const {
    return sign(t) * sign(s) * k_(static_cast<Eigen::Index>(t % n_), static_cast<Eigen::Index>(s % n_));
  }
  bool at_upper(std::size_t t) const { return alpha_[t] >= c_; }
  bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

  // Maximal violating pair with second-order gain, per sign group; ties go
  // to the lowest index.
  bool select_pair(double tolerance, std::size_t& out_i, std::size_t& out_j) const {
    const double inf = std::numeric_limits<double>::infinity();
    double best_gap = -inf;
    double best_obj = inf;
    bool found = false;
    for (int g = 0; g < 2; ++g) {
      const std::size_t begin = g * n_;
      const std::size_t end = begin + n_;
      // i: can increase (alpha < C) with the smallest gradient.
      double g_min = inf;
      std::size_t i = end;
      for (std::size_t t = begin; t < end; ++t) {
        if (!at_upper(t) && grad_[t] < g_min) {
          g_min = grad_[t];
          i = t;
        }
      }
      double g_max = -inf;
      for (std::size_t t = begin; t < end; ++t)
        if (!at_lower(t)) g_max = std::max(g_max, grad_[t]);
      best_gap = std::max(best_gap, g_max - g_min);
      if (i == end) continue;
      for (std::size_t t = begin; t < end; ++t) {
        if (at_lower(t)) continue;
        const double diff = grad_[t] - g_min;
        if (diff <= 0.0) continue;
        double quad = q(i, i) + q(t, t) - 2.0 * q(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj < best_obj) {
          best_obj = obj;
          out_i = i;
          out_j = t;
          found = true;
        }
      }
    }
    return found && best_gap >= tolerance;
  }

  // Moves mass from j (decrease) to i (increase) along the group constraint.
  void update_pair(std::size_t i, std::size_t j) {
    double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
    if (quad <= 0.0) quad = kTau;
    const double old_i = alpha_[i];
    const double old_j = alpha_[j];
    const double delta = (grad_[j] - grad_[i]) / quad;
    const double sum = old_i + old_j;
    double new_i = old_i + delta;
    double new_j = old_j - delta;
    if (new_i > c_) {
      new_i = c_;
      new_j = sum - c_;
    }
    if (new_j < 0.0) {
      new_j = 0.0;
      new_i = sum;
    }
    new_i = std::clamp(new_i, 0.0, c_);
    new_j = std::clamp(new_j, 0.0, c_);
    alpha_[i] = new_i;
    alpha_[j] = new_j;
    const double di = new_i - old_i;
    const double dj = new_j - old_j;
    for (std::size_t t = 0; t < 2 * n_; ++t) grad_[t] += q(t, i) * di + q(t, j) * dj;
  }

  const Eigen::MatrixXd& k_;
  std::size_t n_;
  double c_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
};

}  // namespace

SvrModel train_nusvr(const Eigen::MatrixXd& features, std::span<const double> labels, const SvrParams& params,
                     SvrDiagnostics* diagnostics) {
  check_training_inputs(features, labels);
  if (!(params.nu > 0.0 && params.nu <= 1.0)) throw ParameterError("train_nusvr: nu must be in (0, 1]");
  if (!(params.c > 0.0)) throw ParameterError("train_nusvr: C must be positive");

  SvrModel model;
  model.c = params.c;
  model.nu = params.nu;
  model.scaler = fit_scaler(features);
  model.kernel = resolved_kernel(params.kernel, static_cast<std::size_t>(features.cols()));
  SvrDiagnostics diag;

  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) {
    model.bias = labels.front();
    model.support_vectors.resize(0, static_cast<Eigen::Index>(features.cols()));
    diag.alpha.assign(2 * labels.size(), 0.0);
    diag.converged = true;
    diag.degenerate_labels = true;
    if (diagnostics) *diagnostics = std::move(diag);
    return model;
  }

  const Eigen::MatrixXd scaled = model.scaler.apply(features);
  const Eigen::MatrixXd gram = kernel_matrix(scaled, model.kernel);
  NuSvrSolver solver(gram, labels, params.c, params.nu);
  diag.converged = solver.run(params.tolerance, params.max_iterations, diag.iterations);
  double r = 0.0;
  solver.bias_terms(diag.rho, r);
  diag.epsilon = -r;
  diag.alpha = solver.alpha();
  model.bias = -diag.rho;

  const std::size_t n = labels.size();
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i)
    if (diag.alpha[i] - diag.alpha[i + n] != 0.0) sv.push_back(i);
  model.coefficients.resize(sv.size());
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), scaled.cols());
  for (std::size_t k = 0; k < sv.size(); ++k) {
    model.coefficients[k] = diag.alpha[sv[k]] - diag.alpha[sv[k] + n];
    model.support_vectors.row(static_cast<Eigen::Index>(k)) = scaled.row(static_cast<Eigen::Index>(sv[k]));
  }
  diag.objective = nusvr_dual_objective(scaled, labels, model.kernel, diag.alpha);
  if (diagnostics) *diagnostics = std::move(diag);
  return model;
}

double nusvr_dual_objective(const Eigen::MatrixXd& scaled_rows, std::span<const double> labels, const Kernel& kernel,
                            std::span<const double> alpha) {
  const std::size_t n = labels.size();
  if (alpha.size() != 2 * n || static_cast<std::size_t>(scaled_rows.rows()) != n)
    throw DimensionError("nusvr_dual_objective: size mismatch");
  const Eigen::MatrixXd gram = kernel_matrix(scaled_rows, resolved_kernel(kernel, static_cast<std::size_t>(scaled_rows.cols())));
  Eigen::VectorXd beta(static_cast<Eigen::Index>(n));
  double linear = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    beta(static_cast<Eigen::Index>(i)) = alpha[i] - alpha[i + n];
    linear += labels[i] * (alpha[i] - alpha[i + n]);
  }
  return 0.5 * beta.dot(gram * beta) - linear;
}

double nusvr_kkt_gap(const Eigen::MatrixXd& scaled_rows, std::span<const double> labels, const Kernel& kernel, double c,
                     std::span<const double> alpha) {
  const std::size_t n = labels.size();
  if (alpha.size() != 2 * n || static_cast<std::size_t>(scaled_rows.rows()) != n)
    throw DimensionError("nusvr_kkt_gap: size mismatch");
  const Eigen::MatrixXd gram = kernel_matrix(scaled_rows, resolved_kernel(kernel, static_cast<std::size_t>(scaled_rows.cols())));
  Eigen::VectorXd beta(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) beta(static_cast<Eigen::Index>(i)) = alpha[i] - alpha[i + n];
  const Eigen::VectorXd k_beta = gram * beta;
  double gap = 0.0;
  for (int g = 0; g < 2; ++g) {
    // d/d alpha_i = (K beta)_i - y_i ; d/d alpha*_i = -(K beta)_i + y_i
    double min_up = std::numeric_limits<double>::infinity();
    double max_down = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double base = k_beta(static_cast<Eigen::Index>(i)) - labels[i];
      const double grad = g == 0 ? base : -base;
      const double a = alpha[g * n + i];
      if (a < c) min_up = std::min(min_up, grad);
      if (a > 0.0) max_down = std::max(max_down, grad);
    }
    if (std::isfinite(min_up) && std::isfinite(max_down)) gap = std::max(gap, max_down - min_up);
  }
  return gap;
}

// ---------------------------------------------------------------------------
// Prediction and persistence

double SvrModel::predict(std::span<const double> features) const {
  const std::vector<double> x = scaler.apply(features);
  const Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  double sum = bias;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
    const double k = kernel.kind == KernelKind::linear ? support_vectors.row(i).dot(row)
                                                       : std::exp(-kernel.gamma * (support_vectors.row(i) - row).squaredNorm());
    sum += coefficients[static_cast<std::size_t>(i)] * k;
  }
  return sum;
}

std::vector<double> SvrModel::predict(const Eigen::MatrixXd& rows) const {
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  std::vector<double> buffer(static_cast<std::size_t>(rows.cols()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) buffer[static_cast<std::size_t>(c)] = rows(r, c);
    out[static_cast<std::size_t>(r)] = predict(buffer);
  }
  return out;
}

namespace {
constexpr std::uint32_t kModelVersion = 1;
}

std::vector<std::uint8_t> SvrModel::serialize() const {
  detail::ByteWriter w;
  w.magic("SVR1");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(kernel.kind));
  w.f64(kernel.gamma);
  w.f64(c);
  w.f64(nu);
  w.f64(bias);
  w.u32(static_cast<std::uint32_t>(scaler.dim()));
  for (std::size_t i = 0; i < scaler.dim(); ++i) {
    w.f64(scaler.min[i]);
    w.f64(scaler.max[i]);
  }
  w.u32(static_cast<std::uint32_t>(coefficients.size()));
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    w.f64(coefficients[k]);
    for (Eigen::Index c = 0; c < support_vectors.cols(); ++c) w.f64(support_vectors(static_cast<Eigen::Index>(k), c));
  }
  return w.take();
}

SvrModel SvrModel::deserialize(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "svr model");
  r.expect_magic("SVR1");
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) throw FormatError("svr model: unsupported version " + std::to_string(version));
  SvrModel m;
  const std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(KernelKind::rbf)) throw FormatError("svr model: unknown kernel");
  m.kernel.kind = static_cast<KernelKind>(kind);
  m.kernel.gamma = r.f64();
  m.c = r.f64();
  m.nu = r.f64();
  m.bias = r.f64();
  const std::uint32_t dim = r.u32();
  if (r.remaining() < std::uint64_t{dim} * 16) throw FormatError("svr model: truncated scaler");
  m.scaler.min.resize(dim);
  m.scaler.max.resize(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    m.scaler.min[i] = r.f64();
    m.scaler.max[i] = r.f64();
  }
  const std::uint32_t count = r.u32();
  if (r.remaining() != std::uint64_t{count} * (std::uint64_t{dim} + 1) * 8) throw FormatError("svr model: bad support vector block");
  m.coefficients.resize(count);
  m.support_vectors.resize(count, dim);
  for (std::uint32_t k = 0; k < count; ++k) {
    m.coefficients[k] = r.f64();
    for (std::uint32_t c = 0; c < dim; ++c) m.support_vectors(k, c) = r.f64();
  }
  return m;
}

void SvrModel::save(const std::filesystem::path& path) const { detail::write_file_bytes(path, serialize()); }

SvrModel SvrModel::load(const std::filesystem::path& path) { return deserialize(detail::read_file_bytes(path)); }

std::size_t model_size_bytes(const SvrModel& model) { return model.serialize().size(); }

}  // namespace cbiqa
