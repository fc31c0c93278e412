#pragma once

#include <Eigen/Dense>

namespace spme::gp {

/// One row per observation, one column per feature dimension.
using FeatureMatrix = Eigen::MatrixXd;

/// Squared-exponential covariance hyperparameters. The observation noise is
/// carried in normalized form, sigma2_n = sigma2_n_tilde * sigma2_f.
struct KernelHyperparameters {
  double sigma2_f = 1.0;
  Eigen::VectorXd length_scales;
  double sigma2_n_tilde = 0.0;

  double sigma2_n() const { return sigma2_n_tilde * sigma2_f; }
  Eigen::Index dims() const { return length_scales.size(); }
};

/// Throws DimensionError / ContractViolation on invalid hyperparameters.
void validate(const KernelHyperparameters& hp);

/// k(x, x') = sigma2_f * exp(-0.5 * sum_j ((x_j - x'_j) / l_j)^2)
double kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_prime,
              const KernelHyperparameters& hp);

/// Unscaled noisy covariance Phi_n = K / sigma2_f + sigma2_n_tilde * I.
/// Rows are distributed over OpenMP threads.
Eigen::MatrixXd build_phi_n(const FeatureMatrix& X, const KernelHyperparameters& hp);

/// Single-threaded reference for build_phi_n, one kernel() call per entry.
Eigen::MatrixXd build_phi_n_serial(const FeatureMatrix& X, const KernelHyperparameters& hp);

/// K(A, B) including sigma2_f, |A| x |B|.
Eigen::MatrixXd cross_covariance(const FeatureMatrix& A, const FeatureMatrix& B, const KernelHyperparameters& hp);

/// Cholesky factor of a symmetric positive definite matrix with the
/// escalating diagonal jitter policy: none, then 1e-10, 1e-9, ... 1e-6.
class SpdFactor {
 public:
  static constexpr double kFirstJitter = 1e-10;
  static constexpr double kMaxJitter = 1e-6;

  /// Throws IllConditionedError when the largest jitter still fails.
  explicit SpdFactor(const Eigen::MatrixXd& a);

  Eigen::Index size() const { return llt_.rows(); }
  double jitter() const { return jitter_; }
  /// log|A| from the Cholesky pivots, 2 * sum(log L_ii).
  double log_det() const;
  double min_pivot() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  /// b^T A^{-1} b computed as |L^{-1} b|^2.
  double quad_form(const Eigen::VectorXd& b) const;
  /// L^{-1} B
  Eigen::MatrixXd half_solve(const Eigen::MatrixXd& b) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

struct GpPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// mean = K_*^T K_n^{-1} y,  cov = K_** - K_*^T K_n^{-1} K_* + sigma2_n I
GpPosterior gpr_predict(const FeatureMatrix& X, const Eigen::VectorXd& y, const FeatureMatrix& X_star,
                        const KernelHyperparameters& hp);

/// Hybrid output V = V_SPMe + dV, elementwise.
Eigen::VectorXd hybrid_predict(const Eigen::VectorXd& v_spme, const Eigen::VectorXd& posterior_mean);

/// Per-dimension z-score transform fitted on a training set. Dimensions with
/// zero spread keep unit scale so they contribute nothing to distances.
struct FeatureScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static FeatureScaler fit(const FeatureMatrix& X);
  FeatureMatrix apply(const FeatureMatrix& X) const;
};

/// GPR residual model in standardized feature space.
struct ResidualModel {
  FeatureScaler scaler;
  KernelHyperparameters hp;
  FeatureMatrix X_train;  // standardized
  Eigen::VectorXd y_train;

  static ResidualModel fit(const FeatureMatrix& X_raw, const Eigen::VectorXd& y, const KernelHyperparameters& hp);
  GpPosterior predict(const FeatureMatrix& X_raw) const;
};

}  // namespace spme::gp
