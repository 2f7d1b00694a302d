#pragma once

#include <Eigen/Dense>

namespace rankcalm {

/// Dense real operand: an n x m matrix with n <= m, or a symmetric n x n
/// matrix when `symmetric` is set. All entries finite.
struct Matrix {
  Eigen::MatrixXd values;
  bool symmetric = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  static Matrix rectangular(Eigen::MatrixXd m);
  static Matrix symmetric_matrix(Eigen::MatrixXd m);
};

/// Largest absolute deviation from symmetry, 0 for empty matrices.
double symmetry_gap(const Eigen::MatrixXd& m);

}  // namespace rankcalm
