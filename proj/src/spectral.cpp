#include "rankcalm/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "rankcalm/matrix.hpp"

namespace rankcalm::spectral {

Eigen::MatrixXd SpectralDecomposition::reconstruct() const {
  if (mode == DecompMode::Eig) return left * values.asDiagonal() * left.transpose();
  return left * values.asDiagonal() * right.leftCols(values.size()).transpose();
}

SpectralDecomposition decompose(const Eigen::MatrixXd& X, DecompMode mode) {
  SpectralDecomposition D;
  D.mode = mode;
  if (mode == DecompMode::Eig) {
    if (X.rows() != X.cols() || symmetry_gap(X) > 1e-10 * (1.0 + X.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("decompose: eig mode requires a symmetric matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()));
    if (es.info() != Eigen::Success)
      throw std::runtime_error(
          "decompose: symmetric eigensolver did not converge within its sweep cap (30 per "
          "off-diagonal entry)");
    const Eigen::Index n = X.rows();
    D.left.resize(n, n);
    D.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {  // ascending -> nonincreasing
      D.values(i) = es.eigenvalues()(n - 1 - i);
      D.left.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return D;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("decompose: SVD did not converge (bidiagonal QR iteration cap hit)");
  D.left = svd.matrixU();
  D.right = svd.matrixV();
  D.values = svd.singularValues();
  return D;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& X) {
  return Eigen::BDCSVD<Eigen::MatrixXd>(X).singularValues();
}

Eigen::Index numeric_rank(const Eigen::VectorXd& sigma, double eps_rank) {
  if (sigma.size() == 0) return 0;
  const double cut = eps_rank * sigma(0);
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > cut) ++r;
  return r;
}

Eigen::Index numeric_rank(const Eigen::MatrixXd& X, double eps_rank) {
  return numeric_rank(singular_values(X), eps_rank);
}

double kyfan_norm(const Eigen::MatrixXd& X, Eigen::Index r) {
  return head_sum(singular_values(X), r);
}

double kyfan_norm(const SpectralDecomposition& D, Eigen::Index r) {
  if (D.mode != DecompMode::Svd)
    throw std::invalid_argument("kyfan_norm: svd-mode decomposition required");
  return head_sum(D.values, r);
}

double nuclear_norm(const Eigen::MatrixXd& X) { return singular_values(X).sum(); }

double rank_residual(const Eigen::MatrixXd& X, Eigen::Index r) {
  return tail_sum(singular_values(X), r);
}

double rank_residual(const SpectralDecomposition& D, Eigen::Index r) {
  if (D.mode != DecompMode::Svd)
    throw std::invalid_argument("rank_residual: svd-mode decomposition required");
  return tail_sum(D.values, r);
}

std::pair<double, double> truncated_residual(const Eigen::VectorXd& sigma, Eigen::Index r) {
  if (r < 1 || r > sigma.size())
    throw std::invalid_argument("truncated_residual: r out of range");
  const Eigen::Index n = sigma.size();
  const double hr = sigma.head(r - 1).sum() + sigma.tail(n - r + 1).norm();
  return {hr, sigma.sum() - hr};
}

std::pair<double, double> truncated_residual(const Eigen::MatrixXd& X, Eigen::Index r) {
  return truncated_residual(singular_values(X), r);
}

double schatten_tail(const Eigen::VectorXd& sigma, Eigen::Index r, double p) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("schatten_tail: p must lie in (0,1)");
  if (r < 1 || r >= sigma.size()) throw std::invalid_argument("schatten_tail: r out of range");
  double acc = 0.0;
  for (Eigen::Index i = r; i < sigma.size(); ++i) acc += std::pow(sigma(i), p);
  return acc;
}

double schatten_tail(const Eigen::MatrixXd& X, Eigen::Index r, double p) {
  return schatten_tail(singular_values(X), r, p);
}

Eigen::MatrixXd kyfan_subgradient(const SpectralDecomposition& D, Eigen::Index r) {
  if (D.mode != DecompMode::Svd)
    throw std::invalid_argument("kyfan_subgradient: svd-mode decomposition required");
  if (r < 1 || r > D.values.size())
    throw std::invalid_argument("kyfan_subgradient: r out of range");
  return D.left.leftCols(r) * D.right.leftCols(r).transpose();
}

Eigen::MatrixXd hr_subgradient(const SpectralDecomposition& D, Eigen::Index r) {
  if (D.mode != DecompMode::Svd)
    throw std::invalid_argument("hr_subgradient: svd-mode decomposition required");
  const Eigen::Index n = D.values.size();
  if (r < 1 || r > n) throw std::invalid_argument("hr_subgradient: r out of range");
  Eigen::VectorXd g = Eigen::VectorXd::Ones(n);
  const double s = D.values.tail(n - r + 1).norm();
  for (Eigen::Index i = r - 1; i < n; ++i) g(i) = (s == 0.0) ? 0.0 : D.values(i) / s;
  return D.left * g.asDiagonal() * D.right.leftCols(n).transpose();
}

}  // namespace rankcalm::spectral
