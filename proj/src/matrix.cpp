#include "rankcalm/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rankcalm {

double symmetry_gap(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

void Matrix::validate() const {
  if (values.size() == 0) throw std::invalid_argument("matrix: empty");
  if (!values.allFinite()) throw std::invalid_argument("matrix: nonfinite entry");
  if (symmetric) {
    if (values.rows() != values.cols())
      throw std::invalid_argument("matrix: symmetric flag on a non-square matrix");
    const double gap = symmetry_gap(values);
    if (gap > 1e-12 * (1.0 + values.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("matrix: symmetry violated by " + std::to_string(gap));
  } else if (values.rows() > values.cols()) {
    throw std::invalid_argument("matrix: rectangular mode requires rows <= cols");
  }
}

Matrix Matrix::rectangular(Eigen::MatrixXd m) {
  Matrix out{std::move(m), false};
  out.validate();
  return out;
}

Matrix Matrix::symmetric_matrix(Eigen::MatrixXd m) {
  Matrix out{std::move(m), true};
  out.validate();
  return out;
}

}  // namespace rankcalm
