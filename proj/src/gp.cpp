#include "spme/gp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "spme/errors.hpp"

namespace spme::gp {

void validate(const KernelHyperparameters& hp) {
  if (!(hp.sigma2_f > 0.0) || !std::isfinite(hp.sigma2_f)) throw ContractViolation("sigma2_f must be positive");
  if (!(hp.sigma2_n_tilde >= 0.0) || !std::isfinite(hp.sigma2_n_tilde))
    throw ContractViolation("sigma2_n_tilde must be nonnegative");
  for (Eigen::Index j = 0; j < hp.length_scales.size(); ++j)
    if (!(hp.length_scales[j] > 0.0) || !std::isfinite(hp.length_scales[j]))
      throw ContractViolation("length scale " + std::to_string(j) + " must be positive");
}

namespace {

void check_dims(const FeatureMatrix& X, const KernelHyperparameters& hp) {
  if (X.cols() != hp.dims())
    throw DimensionError("feature dimension " + std::to_string(X.cols()) + " does not match " +
                         std::to_string(hp.dims()) + " length scales");
  if (!X.allFinite()) throw DimensionError("feature matrix contains non-finite entries");
}

// Features divided by their length scales, so the kernel reduces to exp(-|a-b|^2/2).
Eigen::MatrixXd scaled(const FeatureMatrix& X, const KernelHyperparameters& hp) {
  return X * hp.length_scales.cwiseInverse().asDiagonal();
}

}  // namespace

double kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_prime,
              const KernelHyperparameters& hp) {
  if (x.size() != hp.dims() || x_prime.size() != hp.dims())
    throw DimensionError("kernel inputs do not match the length-scale count");
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double d = (x[j] - x_prime[j]) / hp.length_scales[j];
    s += d * d;
  }
  return hp.sigma2_f * std::exp(-0.5 * s);
}

Eigen::MatrixXd build_phi_n(const FeatureMatrix& X, const KernelHyperparameters& hp) {
  check_dims(X, hp);
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd Z = scaled(X, hp);
  Eigen::MatrixXd phi(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i, i) = 1.0 + hp.sigma2_n_tilde;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::exp(-0.5 * (Z.row(i) - Z.row(j)).squaredNorm());
      phi(i, j) = v;
      phi(j, i) = v;
    }
  }
  return phi;
}

Eigen::MatrixXd build_phi_n_serial(const FeatureMatrix& X, const KernelHyperparameters& hp) {
  check_dims(X, hp);
  KernelHyperparameters unit = hp;
  unit.sigma2_f = 1.0;
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd phi(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      phi(i, j) = kernel(X.row(i).transpose(), X.row(j).transpose(), unit) + (i == j ? hp.sigma2_n_tilde : 0.0);
  return phi;
}

Eigen::MatrixXd cross_covariance(const FeatureMatrix& A, const FeatureMatrix& B, const KernelHyperparameters& hp) {
  check_dims(A, hp);
  check_dims(B, hp);
  const Eigen::MatrixXd Za = scaled(A, hp);
  const Eigen::MatrixXd Zb = scaled(B, hp);
  Eigen::MatrixXd k(A.rows(), B.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      k(i, j) = hp.sigma2_f * std::exp(-0.5 * (Za.row(i) - Zb.row(j)).squaredNorm());
  return k;
}

SpdFactor::SpdFactor(const Eigen::MatrixXd& a) {
  auto pivots_ok = [this] {
    if (llt_.info() != Eigen::Success) return false;
    const auto d = llt_.matrixLLT().diagonal();
    return d.allFinite() && d.minCoeff() > 0.0;
  };
  llt_.compute(a);
  if (pivots_ok()) return;
  Eigen::MatrixXd shifted = a;
  double previous = 0.0;
  for (double jitter = kFirstJitter; jitter <= kMaxJitter * (1.0 + 1e-9); jitter *= 10.0) {
    shifted.diagonal().array() += jitter - previous;
    previous = jitter;
    llt_.compute(shifted);
    if (pivots_ok()) {
      jitter_ = jitter;
      return;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  const double cond = lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
  throw IllConditionedError(cond, kMaxJitter);
}

double SpdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double SpdFactor::min_pivot() const { return llt_.matrixLLT().diagonal().minCoeff(); }

double SpdFactor::quad_form(const Eigen::VectorXd& b) const {
  if (b.size() != size()) throw DimensionError("quadratic form vector length does not match the factor");
  const Eigen::VectorXd w = llt_.matrixL().solve(b);
  return w.squaredNorm();
}

Eigen::MatrixXd SpdFactor::half_solve(const Eigen::MatrixXd& b) const { return llt_.matrixL().solve(b); }

GpPosterior gpr_predict(const FeatureMatrix& X, const Eigen::VectorXd& y, const FeatureMatrix& X_star,
                        const KernelHyperparameters& hp) {
  validate(hp);
  if (y.size() != X.rows()) throw DimensionError("target vector length does not match training rows");
  Eigen::MatrixXd k_n = cross_covariance(X, X, hp);
  k_n.diagonal().array() += hp.sigma2_n();
  const SpdFactor factor(k_n);
  const Eigen::MatrixXd k_star = cross_covariance(X, X_star, hp);
  const Eigen::MatrixXd v = factor.half_solve(k_star);

  GpPosterior post;
  post.mean = k_star.transpose() * factor.solve(y);
  post.covariance = cross_covariance(X_star, X_star, hp) - v.transpose() * v;
  post.covariance.diagonal().array() += hp.sigma2_n();
  // Symmetrize away rounding in the subtraction.
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
  return post;
}

Eigen::VectorXd hybrid_predict(const Eigen::VectorXd& v_spme, const Eigen::VectorXd& posterior_mean) {
  if (v_spme.size() != posterior_mean.size())
    throw DimensionError("SPMe voltage and residual prediction lengths differ");
  return v_spme + posterior_mean;
}

FeatureScaler FeatureScaler::fit(const FeatureMatrix& X) {
  FeatureScaler s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().sum() / std::max(n, 1.0);
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
  }
  return s;
}

FeatureMatrix FeatureScaler::apply(const FeatureMatrix& X) const {
  if (X.cols() != mean.size()) throw DimensionError("scaler dimension mismatch");
  return (X.rowwise() - mean.transpose()) * scale.cwiseInverse().asDiagonal();
}

ResidualModel ResidualModel::fit(const FeatureMatrix& X_raw, const Eigen::VectorXd& y,
                                 const KernelHyperparameters& hp) {
  ResidualModel m;
  m.scaler = FeatureScaler::fit(X_raw);
  m.hp = hp;
  m.X_train = m.scaler.apply(X_raw);
  m.y_train = y;
  return m;
}

GpPosterior ResidualModel::predict(const FeatureMatrix& X_raw) const {
  return gpr_predict(X_train, y_train, scaler.apply(X_raw), hp);
}

}  // namespace spme::gp
