#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace rankcalm::spectral {

enum class DecompMode { Svd, Eig };

/// Factors of X. Svd mode: X = left * Diag(values) * right^T with values the
/// singular values. Eig mode (symmetric X): X = left * Diag(values) * left^T
/// with signed eigenvalues; `right` is empty. Values sorted nonincreasing,
/// factor columns orthonormal.
struct SpectralDecomposition {
  Eigen::MatrixXd left;
  Eigen::VectorXd values;
  Eigen::MatrixXd right;
  DecompMode mode = DecompMode::Svd;

  Eigen::MatrixXd reconstruct() const;
};

/// Full-factor decomposition (left is rows x rows, right is cols x cols).
SpectralDecomposition decompose(const Eigen::MatrixXd& X, DecompMode mode);

Eigen::VectorXd singular_values(const Eigen::MatrixXd& X);

/// #{ i : sigma_i > eps_rank * sigma_1 }.
Eigen::Index numeric_rank(const Eigen::VectorXd& sigma, double eps_rank = 1e-8);
Eigen::Index numeric_rank(const Eigen::MatrixXd& X, double eps_rank = 1e-8);

// --- tail/head sums on a nonincreasing singular-value vector -----------------

template <class Derived>
typename Derived::Scalar head_sum(const Eigen::MatrixBase<Derived>& sigma, Eigen::Index r) {
  if (r < 1 || r > sigma.size()) throw std::invalid_argument("head_sum: r out of range");
  return sigma.derived().head(r).sum();
}

template <class Derived>
typename Derived::Scalar tail_sum(const Eigen::MatrixBase<Derived>& sigma, Eigen::Index r) {
  return sigma.derived().sum() - head_sum(sigma, r);
}

// --- norms and residual functions --------------------------------------------

/// Sum of the r largest singular values; r = rows gives the nuclear norm.
double kyfan_norm(const Eigen::MatrixXd& X, Eigen::Index r);
double kyfan_norm(const SpectralDecomposition& D, Eigen::Index r);

double nuclear_norm(const Eigen::MatrixXd& X);

/// theta_r(X) = ||X||_* - ||X||_(r) = sum of singular values past the r-th.
double rank_residual(const Eigen::MatrixXd& X, Eigen::Index r);
double rank_residual(const SpectralDecomposition& D, Eigen::Index r);

/// H_r(X) = sigma_1 + ... + sigma_{r-1} + sqrt(sigma_r^2 + ... + sigma_n^2)
/// and eta_r(X) = ||X||_* - H_r(X). Returns (H_r, eta_r).
std::pair<double, double> truncated_residual(const Eigen::MatrixXd& X, Eigen::Index r);
std::pair<double, double> truncated_residual(const Eigen::VectorXd& sigma, Eigen::Index r);

/// sum_{i > r} sigma_i(X)^p for p in (0,1).
double schatten_tail(const Eigen::MatrixXd& X, Eigen::Index r, double p);
double schatten_tail(const Eigen::VectorXd& sigma, Eigen::Index r, double p);

// --- subgradients -------------------------------------------------------------

/// W = U_1 V_1^T from the first r factor columns. <W, X> = ||X||_(r).
/// Non-unique at sigma_r = sigma_{r+1}; the decomposition's column order is used.
Eigen::MatrixXd kyfan_subgradient(const SpectralDecomposition& D, Eigen::Index r);

/// W = U Diag(g) V^T with g_i = 1 for i < r and g_i = sigma_i / s for i >= r,
/// s = sqrt(sum_{i>=r} sigma_i^2); the tail weights are 0 when s = 0.
/// <W, X> = H_r(X).
Eigen::MatrixXd hr_subgradient(const SpectralDecomposition& D, Eigen::Index r);

}  // namespace rankcalm::spectral
