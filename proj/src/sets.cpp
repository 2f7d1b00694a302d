#include "rankcalm/sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rankcalm/matrix.hpp"
#include "rankcalm/spectral.hpp"

namespace rankcalm::sets {

using rankcalm::spectral::DecompMode;
using rankcalm::spectral::decompose;

std::string family_name(SetFamily f) {
  switch (f) {
    case SetFamily::NormBall: return "normball";
    case SetFamily::FrobeniusSphere: return "frobeniussphere";
    case SetFamily::PsdCone: return "psdcone";
    case SetFamily::RankSet: return "rankset";
    case SetFamily::PsdRankSet: return "psdrankset";
    case SetFamily::Correlation: return "correlation";
    case SetFamily::TwoTrace: return "twotrace";
    case SetFamily::QuadDiag: return "quaddiag";
    case SetFamily::BlockTrace: return "blocktrace";
    case SetFamily::RowStochastic: return "rowstochastic";
    case SetFamily::DoublyStochastic: return "doublystochastic";
    case SetFamily::BinaryQP: return "binaryqp";
  }
  return "?";
}

std::string norm_name(NormKind k) {
  switch (k) {
    case NormKind::Spectral: return "spectral";
    case NormKind::Frobenius: return "frobenius";
    case NormKind::Nuclear: return "nuclear";
  }
  return "?";
}

// --- factories -------------------------------------------------------------------

ConstraintSet ConstraintSet::norm_ball(NormKind k, double radius, Eigen::Index n, Eigen::Index m,
                                       bool symmetric, bool psd) {
  ConstraintSet s;
  s.family = SetFamily::NormBall;
  s.norm = k;
  s.radius = radius;
  s.rows = n;
  s.cols = symmetric ? n : m;
  s.symmetric_space = symmetric;
  s.psd_part = psd;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::frobenius_sphere(double radius, Eigen::Index n, Eigen::Index m,
                                              bool symmetric) {
  ConstraintSet s;
  s.family = SetFamily::FrobeniusSphere;
  s.norm = NormKind::Frobenius;
  s.radius = radius;
  s.rows = n;
  s.cols = symmetric ? n : m;
  s.symmetric_space = symmetric;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::psd_cone(Eigen::Index n) {
  ConstraintSet s;
  s.family = SetFamily::PsdCone;
  s.rows = s.cols = n;
  s.symmetric_space = true;
  s.psd_part = true;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::rank_set(Eigen::Index r, Eigen::Index n, Eigen::Index m) {
  ConstraintSet s;
  s.family = SetFamily::RankSet;
  s.rank = r;
  s.rows = n;
  s.cols = m;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::psd_rank_set(Eigen::Index r, Eigen::Index n) {
  ConstraintSet s;
  s.family = SetFamily::PsdRankSet;
  s.rank = r;
  s.rows = s.cols = n;
  s.symmetric_space = true;
  s.psd_part = true;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::correlation(Eigen::Index n) {
  ConstraintSet s;
  s.family = SetFamily::Correlation;
  s.rows = s.cols = n;
  s.symmetric_space = true;
  s.psd_part = true;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::two_trace(Eigen::MatrixXd B, Eigen::MatrixXd C, double b1, double b2) {
  ConstraintSet s;
  s.family = SetFamily::TwoTrace;
  s.rows = s.cols = B.rows();
  s.symmetric_space = true;
  s.psd_part = true;
  s.B = std::move(B);
  s.C = std::move(C);
  s.b1 = b1;
  s.b2 = b2;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::quad_diag(Eigen::Index n) {
  ConstraintSet s;
  s.family = SetFamily::QuadDiag;
  s.rows = s.cols = n;
  s.symmetric_space = true;
  s.psd_part = true;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::block_trace(Eigen::Index k, Eigen::Index p) {
  ConstraintSet s;
  s.family = SetFamily::BlockTrace;
  s.blocks = k;
  s.block_size = p;
  s.rows = s.cols = k * p;
  s.symmetric_space = true;
  s.psd_part = true;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::row_stochastic(Eigen::Index n) {
  ConstraintSet s;
  s.family = SetFamily::RowStochastic;
  s.rows = s.cols = n;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::doubly_stochastic(Eigen::Index n) {
  ConstraintSet s;
  s.family = SetFamily::DoublyStochastic;
  s.rows = s.cols = n;
  s.validate();
  return s;
}

ConstraintSet ConstraintSet::binary_qp(std::vector<Eigen::MatrixXd> A, Eigen::VectorXd b,
                                       Eigen::Index n_plus_1) {
  ConstraintSet s;
  s.family = SetFamily::BinaryQP;
  s.rows = s.cols = n_plus_1;
  s.symmetric_space = true;
  s.psd_part = true;
  s.ineq_mats = std::move(A);
  s.ineq_rhs = std::move(b);
  s.validate();
  return s;
}

void ConstraintSet::validate() const {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("set: nonpositive dimension");
  if (!symmetric_space && rows > cols)
    throw std::invalid_argument("set: rectangular families need rows <= cols");
  switch (family) {
    case SetFamily::NormBall:
    case SetFamily::FrobeniusSphere:
      if (radius <= 0.0) throw std::invalid_argument("set: radius must be positive");
      break;
    case SetFamily::RankSet:
    case SetFamily::PsdRankSet:
      if (rank < 1 || rank > rows) throw std::invalid_argument("set: rank bound out of range");
      break;
    case SetFamily::TwoTrace:
      if (B.rows() != rows || B.cols() != rows || C.rows() != rows || C.cols() != rows)
        throw std::invalid_argument("set: twotrace data dimension mismatch");
      if (b2 == 0.0) throw std::invalid_argument("set: twotrace requires b2 != 0");
      break;
    case SetFamily::BlockTrace:
      if (blocks < 1 || block_size < 1 || blocks * block_size != rows)
        throw std::invalid_argument("set: blocktrace requires n = k*p");
      break;
    case SetFamily::BinaryQP:
      if (ineq_rhs.size() != static_cast<Eigen::Index>(ineq_mats.size()))
        throw std::invalid_argument("set: binaryqp needs one rhs per matrix");
      for (const auto& Ai : ineq_mats)
        if (Ai.rows() != rows || Ai.cols() != rows)
          throw std::invalid_argument("set: binaryqp data dimension mismatch");
      break;
    default:
      break;
  }
}

void ConstraintSet::check_dims(const Eigen::MatrixXd& X) const {
  if (X.rows() != rows || X.cols() != cols)
    throw std::invalid_argument("set: operand is " + std::to_string(X.rows()) + "x" +
                                std::to_string(X.cols()) + ", expected " + std::to_string(rows) +
                                "x" + std::to_string(cols));
}

ConstraintSet ConstraintSet::xi_part() const {
  ConstraintSet s = *this;
  s.psd_part = false;
  return s;
}

bool ConstraintSet::is_convex() const {
  switch (family) {
    case SetFamily::FrobeniusSphere:
    case SetFamily::RankSet:
    case SetFamily::PsdRankSet:
      return false;
    default:
      return true;
  }
}

bool ConstraintSet::is_compact() const {
  switch (family) {
    case SetFamily::PsdCone:
    case SetFamily::RankSet:
    case SetFamily::PsdRankSet:
    case SetFamily::TwoTrace:
      return false;
    default:
      return true;
  }
}

bool ConstraintSet::discrete_gamma(Eigen::Index r) const {
  if (r != 1) return false;
  return family == SetFamily::Correlation || family == SetFamily::BinaryQP ||
         family == SetFamily::QuadDiag;
}

double ConstraintSet::max_frobenius() const {
  const double n = static_cast<double>(rows);
  switch (family) {
    case SetFamily::NormBall:
      switch (norm) {
        case NormKind::Spectral: return radius * std::sqrt(n);
        case NormKind::Frobenius: return radius;
        case NormKind::Nuclear: return radius;
      }
      return radius;
    case SetFamily::FrobeniusSphere: return radius;
    case SetFamily::Correlation: return n;
    case SetFamily::QuadDiag: return n;
    case SetFamily::BlockTrace: return static_cast<double>(blocks);
    case SetFamily::RowStochastic: return std::sqrt(n);
    case SetFamily::DoublyStochastic: return std::sqrt(n);
    case SetFamily::BinaryQP: return n;  // trace = n in the lifted space
    default: return std::numeric_limits<double>::infinity();
  }
}

std::vector<LinearEquality> ConstraintSet::equalities() const {
  std::vector<LinearEquality> eqs;
  const Eigen::Index n = rows;
  switch (family) {
    case SetFamily::Correlation:
    case SetFamily::BinaryQP:
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        M(i, i) = 1.0;
        eqs.push_back({M, 1.0});
      }
      break;
    case SetFamily::TwoTrace:
      eqs.push_back({B, b1});
      eqs.push_back({C, b2});
      break;
    case SetFamily::QuadDiag: {
      Eigen::MatrixXd M1 = Eigen::MatrixXd::Zero(n, n);
      M1(0, 0) = 1.0;
      eqs.push_back({M1, 1.0});
      for (Eigen::Index i = 1; i < n; ++i) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        M(i, i) = 1.0;
        M(0, i) = M(i, 0) = -0.5;
        eqs.push_back({M, 0.0});
      }
      break;
    }
    case SetFamily::BlockTrace: {
      const Eigen::Index k = blocks, p = block_size;
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j) {
          Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
          for (Eigen::Index t = 0; t < p; ++t) {
            M(i * p + t, j * p + t) += 0.5;
            M(j * p + t, i * p + t) += 0.5;
          }
          eqs.push_back({M, i == j ? 1.0 : 0.0});
        }
      break;
    }
    case SetFamily::RowStochastic:
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, cols);
        M.row(i).setOnes();
        eqs.push_back({M, 1.0});
      }
      break;
    case SetFamily::DoublyStochastic:
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, cols);
        M.row(i).setOnes();
        eqs.push_back({M, 1.0});
      }
      for (Eigen::Index j = 0; j < cols; ++j) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, cols);
        M.col(j).setOnes();
        eqs.push_back({M, 1.0});
      }
      break;
    default:
      break;
  }
  return eqs;
}

bool ConstraintSet::has_orthant() const {
  return family == SetFamily::RowStochastic || family == SetFamily::DoublyStochastic;
}

// --- membership -------------------------------------------------------------------

namespace {

double matrix_norm(const Eigen::MatrixXd& X, NormKind k) {
  switch (k) {
    case NormKind::Spectral: return spectral::singular_values(X)(0);
    case NormKind::Frobenius: return X.norm();
    case NormKind::Nuclear: return spectral::singular_values(X).sum();
  }
  return 0.0;
}

double min_eigenvalue(const Eigen::MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double residual(const ConstraintSet& S, const Eigen::MatrixXd& X) {
  S.check_dims(X);
  double res = 0.0;
  if (S.symmetric_space) res += symmetry_gap(X);

  switch (S.family) {
    case SetFamily::NormBall:
      res += std::max(0.0, matrix_norm(X, S.norm) - S.radius);
      break;
    case SetFamily::FrobeniusSphere:
      res += std::abs(X.norm() - S.radius);
      break;
    case SetFamily::RankSet:
      res += dist_to_rank(X, S.rank);
      break;
    case SetFamily::PsdRankSet:
      res += dist_to_psd_rank(X, S.rank);
      break;
    case SetFamily::RowStochastic:
    case SetFamily::DoublyStochastic:
      res += X.cwiseMin(0.0).norm();
      break;
    default:
      break;
  }

  double eqres = 0.0;
  for (const auto& eq : S.equalities()) {
    const double v = (eq.M.array() * X.array()).sum() - eq.rhs;
    eqres += v * v;
  }
  res += std::sqrt(eqres);

  if (S.family == SetFamily::BinaryQP) {
    double iqres = 0.0;
    for (Eigen::Index i = 0; i < S.ineq_rhs.size(); ++i) {
      const double v = std::max(0.0, (S.ineq_mats[i].array() * X.array()).sum() - S.ineq_rhs(i));
      iqres += v * v;
    }
    res += std::sqrt(iqres);
  }

  if (S.psd_part && S.family != SetFamily::PsdRankSet)
    res += std::max(0.0, -min_eigenvalue(X));
  return res;
}

// --- projections ---------------------------------------------------------------

Eigen::MatrixXd project_rank(const Eigen::MatrixXd& X, Eigen::Index r) {
  if (r < 1 || r > std::min(X.rows(), X.cols()))
    throw std::invalid_argument("project_rank: r out of range");
  const auto D = decompose(X, DecompMode::Svd);
  return D.left.leftCols(r) * D.values.head(r).asDiagonal() * D.right.leftCols(r).transpose();
}

Eigen::MatrixXd project_psd_rank(const Eigen::MatrixXd& X, Eigen::Index r) {
  if (X.rows() != X.cols()) throw std::invalid_argument("project_psd_rank: square input required");
  if (r < 1 || r > X.rows()) throw std::invalid_argument("project_psd_rank: r out of range");
  const auto D = decompose(X, DecompMode::Eig);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(D.values.size());
  for (Eigen::Index i = 0; i < r; ++i) lam(i) = std::max(D.values(i), 0.0);
  return D.left * lam.asDiagonal() * D.left.transpose();
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& X) {
  const auto D = decompose(X, DecompMode::Eig);
  return D.left * D.values.cwiseMax(0.0).asDiagonal() * D.left.transpose();
}

Eigen::VectorXd simplex_projection(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (t < u[k]) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

Eigen::MatrixXd project_row_simplex(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    Y.row(i) = simplex_projection(X.row(i).transpose()).transpose();
  return Y;
}

Eigen::MatrixXd project_affine(const std::vector<LinearEquality>& eqs, const Eigen::MatrixXd& X) {
  if (eqs.empty()) return X;
  const Eigen::Index p = static_cast<Eigen::Index>(eqs.size());
  Eigen::MatrixXd G(p, p);
  Eigen::VectorXd v(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    v(i) = (eqs[i].M.array() * X.array()).sum() - eqs[i].rhs;
    for (Eigen::Index j = i; j < p; ++j)
      G(i, j) = G(j, i) = (eqs[i].M.array() * eqs[j].M.array()).sum();
  }
  // Least-squares multiplier solve; tolerates redundant rows.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
  const Eigen::VectorXd y = cod.solve(v);
  Eigen::MatrixXd out = X;
  for (Eigen::Index i = 0; i < p; ++i) out -= y(i) * eqs[i].M;
  return out;
}

namespace {

Eigen::MatrixXd project_norm_ball(const Eigen::MatrixXd& X, NormKind k, double radius) {
  switch (k) {
    case NormKind::Frobenius: {
      const double nrm = X.norm();
      return nrm <= radius ? X : Eigen::MatrixXd((radius / nrm) * X);
    }
    case NormKind::Spectral: {
      const auto D = decompose(X, DecompMode::Svd);
      if (D.values.size() == 0 || D.values(0) <= radius) return X;
      const Eigen::VectorXd s = D.values.cwiseMin(radius);
      return D.left * s.asDiagonal() * D.right.leftCols(s.size()).transpose();
    }
    case NormKind::Nuclear: {
      const auto D = decompose(X, DecompMode::Svd);
      if (D.values.sum() <= radius) return X;
      // l1-ball projection of the (sorted, nonnegative) singular values.
      double cum = 0.0, theta = 0.0;
      for (Eigen::Index i = 0; i < D.values.size(); ++i) {
        cum += D.values(i);
        const double t = (cum - radius) / static_cast<double>(i + 1);
        if (t < D.values(i)) theta = t;
      }
      const Eigen::VectorXd s = (D.values.array() - theta).max(0.0);
      return D.left * s.asDiagonal() * D.right.leftCols(s.size()).transpose();
    }
  }
  return X;
}

}  // namespace

Eigen::MatrixXd dykstra(const Eigen::MatrixXd& X0, const std::vector<ProxOp>& ops,
                        const DykstraOptions& opts) {
  if (ops.empty()) return X0;
  Eigen::MatrixXd x = X0;
  std::vector<Eigen::MatrixXd> inc(ops.size(), Eigen::MatrixXd::Zero(X0.rows(), X0.cols()));
  double change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    const Eigen::MatrixXd prev = x;
    for (size_t k = 0; k < ops.size(); ++k) {
      const Eigen::MatrixXd z = x + inc[k];
      x = ops[k].apply(z);
      inc[k] = z - x;
    }
    change = (x - prev).norm();
    if (change <= opts.tol * (1.0 + x.norm())) return x;
  }
  throw std::runtime_error("dykstra: no convergence in " + std::to_string(opts.max_iters) +
                           " cycles, final change " + std::to_string(change));
}

std::vector<ProxOp> prox_components(const ConstraintSet& S) {
  if (!S.is_convex())
    throw std::invalid_argument("prox_components: " + family_name(S.family) + " is not convex");
  std::vector<ProxOp> ops;
  switch (S.family) {
    case SetFamily::NormBall: {
      const NormKind k = S.norm;
      const double r = S.radius;
      ops.push_back({"normball", [k, r](const Eigen::MatrixXd& X) {
                       return project_norm_ball(X, k, r);
                     }});
      break;
    }
    case SetFamily::PsdCone:
      break;  // handled by the shared psd op below
    case SetFamily::RowStochastic:
      ops.push_back({"rowsimplex", [](const Eigen::MatrixXd& X) {
                       return project_row_simplex(X);
                     }});
      break;
    case SetFamily::DoublyStochastic: {
      const auto eqs = S.equalities();
      ops.push_back({"affine", [eqs](const Eigen::MatrixXd& X) {
                       return project_affine(eqs, X);
                     }});
      ops.push_back({"orthant", [](const Eigen::MatrixXd& X) {
                       return Eigen::MatrixXd(X.cwiseMax(0.0));
                     }});
      break;
    }
    case SetFamily::BinaryQP: {
      const auto eqs = S.equalities();
      ops.push_back({"affine", [eqs](const Eigen::MatrixXd& X) {
                       return project_affine(eqs, X);
                     }});
      for (Eigen::Index i = 0; i < S.ineq_rhs.size(); ++i) {
        const Eigen::MatrixXd A = 0.5 * (S.ineq_mats[i] + S.ineq_mats[i].transpose());
        const double b = S.ineq_rhs(i);
        const double a2 = A.squaredNorm();
        ops.push_back({"halfspace", [A, b, a2](const Eigen::MatrixXd& X) {
                         const double v = (A.array() * X.array()).sum() - b;
                         if (v <= 0.0 || a2 == 0.0) return X;
                         return Eigen::MatrixXd(X - (v / a2) * A);
                       }});
      }
      break;
    }
    default: {
      const auto eqs = S.equalities();
      if (!eqs.empty())
        ops.push_back({"affine", [eqs](const Eigen::MatrixXd& X) {
                         return project_affine(eqs, X);
                       }});
      break;
    }
  }
  if (S.psd_part)
    ops.push_back({"psd", [](const Eigen::MatrixXd& X) { return project_psd(X); }});
  return ops;
}

Eigen::MatrixXd project_set(const ConstraintSet& S, const Eigen::MatrixXd& X, double tol) {
  S.check_dims(X);
  Eigen::MatrixXd X0 = S.symmetric_space ? Eigen::MatrixXd(0.5 * (X + X.transpose())) : X;
  switch (S.family) {
    case SetFamily::NormBall:
      if (!S.psd_part) return project_norm_ball(X0, S.norm, S.radius);
      break;
    case SetFamily::FrobeniusSphere: {
      const double nrm = X0.norm();
      if (nrm == 0.0) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(S.rows, S.cols);
        E(0, 0) = S.radius;  // every sphere point is nearest to the origin
        return E;
      }
      return (S.radius / nrm) * X0;
    }
    case SetFamily::PsdCone: return project_psd(X0);
    case SetFamily::RankSet: return project_rank(X0, S.rank);
    case SetFamily::PsdRankSet: return project_psd_rank(X0, S.rank);
    case SetFamily::RowStochastic: return project_row_simplex(X0);
    case SetFamily::TwoTrace:
      if (!S.psd_part) return project_affine(S.equalities(), X0);
      break;
    default:
      break;
  }
  if (!S.psd_part && !S.has_orthant() && S.family != SetFamily::BinaryQP) {
    const auto eqs = S.equalities();
    if (!eqs.empty()) return project_affine(eqs, X0);
  }
  DykstraOptions opts;
  opts.tol = tol;
  return dykstra(X0, prox_components(S), opts);
}

// --- distances -------------------------------------------------------------------

double dist_to_rank(const Eigen::MatrixXd& X, Eigen::Index r) {
  const Eigen::VectorXd s = spectral::singular_values(X);
  if (r >= s.size()) return 0.0;
  return s.tail(s.size() - r).norm();
}

double dist_to_psd_rank(const Eigen::MatrixXd& X, Eigen::Index r) {
  const auto D = decompose(X, DecompMode::Eig);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < D.values.size(); ++i) {
    const double kept = (i < r) ? std::max(D.values(i), 0.0) : 0.0;
    const double d = D.values(i) - kept;
    acc += d * d;
  }
  return std::sqrt(acc);
}

double dist_to_psd(const Eigen::MatrixXd& X) {
  const auto D = decompose(X, DecompMode::Eig);
  return D.values.cwiseMin(0.0).norm();
}

double dist_to_set(const ConstraintSet& S, const Eigen::MatrixXd& X, double tol) {
  return (X - project_set(S, X, tol)).norm();
}

// --- Gamma_r ---------------------------------------------------------------------

std::vector<Eigen::MatrixXd> enumerate_gamma(const ConstraintSet& S, Eigen::Index r) {
  if (!S.discrete_gamma(r))
    throw std::invalid_argument("enumerate_gamma: " + family_name(S.family) +
                                " with r=" + std::to_string(r) + " is not a discrete instance");
  std::vector<Eigen::MatrixXd> pts;
  const Eigen::Index n = S.rows;
  if (S.family == SetFamily::Correlation || S.family == SetFamily::BinaryQP) {
    // X = x x^T with unit diagonal: sign vectors, the leading sign pinned for
    // the correlation family (x and -x give the same X there and for BinaryQP).
    const Eigen::Index free_bits = n - 1;
    if (free_bits > 20) throw std::invalid_argument("enumerate_gamma: instance too large");
    for (std::uint64_t mask = 0; mask < (1ULL << free_bits); ++mask) {
      Eigen::VectorXd x(n);
      x(0) = 1.0;
      for (Eigen::Index i = 1; i < n; ++i) x(i) = (mask >> (i - 1)) & 1 ? -1.0 : 1.0;
      Eigen::MatrixXd X = x * x.transpose();
      if (S.family == SetFamily::BinaryQP) {
        bool ok = true;
        for (Eigen::Index i = 0; i < S.ineq_rhs.size() && ok; ++i)
          ok = (S.ineq_mats[i].array() * X.array()).sum() <= S.ineq_rhs(i) + 1e-9;
        if (!ok) continue;
      }
      pts.push_back(std::move(X));
    }
    return pts;
  }
  // QuadDiag, r = 1: X = y y^T with y_1 = 1, y_i in {0,1}.
  const Eigen::Index free_bits = n - 1;
  if (free_bits > 20) throw std::invalid_argument("enumerate_gamma: instance too large");
  for (std::uint64_t mask = 0; mask < (1ULL << free_bits); ++mask) {
    Eigen::VectorXd y(n);
    y(0) = 1.0;
    for (Eigen::Index i = 1; i < n; ++i) y(i) = (mask >> (i - 1)) & 1 ? 1.0 : 0.0;
    pts.push_back(y * y.transpose());
  }
  return pts;
}

double dist_to_gamma(const ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& X,
                     const GammaOptions& opts) {
  S.check_dims(X);
  if (opts.method == GammaMethod::Enumerate) {
    const auto pts = enumerate_gamma(S, r);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& P : pts) best = std::min(best, (X - P).norm());
    return best;
  }

  const bool psd = S.psd_part;
  const auto rank_proj = [&](const Eigen::MatrixXd& Z) {
    return psd ? project_psd_rank(Z, r) : project_rank(Z, r);
  };
  const auto rank_dist = [&](const Eigen::MatrixXd& Z) {
    return psd ? dist_to_psd_rank(Z, r) : dist_to_rank(Z, r);
  };

  Rng rng(opts.seed);
  const double scale = std::max(X.norm(), 1.0);
  const double radii[3] = {0.1, 0.5, 1.0};
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < std::max(opts.restarts, 1); ++t) {
    Eigen::MatrixXd Z = X;
    if (t > 0) {
      Rng sub = rng.child(static_cast<std::uint64_t>(t));
      Eigen::MatrixXd G = S.symmetric_space ? sub.gaussian_symmetric(S.rows)
                                            : sub.gaussian_matrix(S.rows, S.cols);
      Z += radii[(t - 1) % 3] * scale * (G / std::max(G.norm(), 1e-12));
    }
    for (int it = 0; it < opts.max_iters; ++it) {
      const Eigen::MatrixXd Znew = project_set(S, rank_proj(Z), opts.tol);
      const double step = (Znew - Z).norm();
      Z = Znew;
      if (step <= opts.tol * (1.0 + Z.norm())) break;
    }
    if (rank_dist(Z) <= opts.feas_tol * (1.0 + Z.norm())) best = std::min(best, (X - Z).norm());
  }
  return best;
}

// --- normal-cone models ------------------------------------------------------------

std::vector<int> zero_value_indices(const Eigen::VectorXd& values) {
  std::vector<int> beta;
  const double vmax = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::abs(values(i)) <= 1e-8 * (1.0 + vmax)) beta.push_back(static_cast<int>(i));
  return beta;
}

int NormalConeModel::subspace_dim() const {
  switch (kind) {
    case ConeKind::LinearSubspace: return static_cast<int>(basis.size());
    case ConeKind::PsdConeAtPoint: {
      const int b = static_cast<int>(beta.size());
      return b * (b + 1) / 2;
    }
    case ConeKind::RankSetAtPoint:
      return static_cast<int>(U_beta.cols() * V_beta.cols());
    case ConeKind::NonnegOrthantAtPoint: {
      int d = 0;
      for (Eigen::Index i = 0; i < positive_mask.rows(); ++i)
        for (Eigen::Index j = 0; j < positive_mask.cols(); ++j)
          if (!positive_mask(i, j)) ++d;
      return d;
    }
    case ConeKind::SumOfModels: {
      int d = 0;
      for (const auto& p : parts) d += p.subspace_dim();
      return d;
    }
  }
  return 0;
}

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& A, double tol) {
  if (A.rows() == 0) return Eigen::MatrixXd::Identity(A.cols(), A.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = s.size() ? tol * std::max(s(0), 1.0) : tol;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return svd.matrixV().rightCols(A.cols() - rank);
}

std::vector<Eigen::MatrixXd> orthonormalize(const std::vector<Eigen::MatrixXd>& mats, double tol) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& M : mats) {
    Eigen::MatrixXd R = M;
    for (const auto& Q : out) R -= (Q.array() * R.array()).sum() * Q;
    for (const auto& Q : out) R -= (Q.array() * R.array()).sum() * Q;  // re-orthogonalize
    const double nrm = R.norm();
    if (nrm > tol * (1.0 + M.norm())) out.push_back(R / nrm);
  }
  return out;
}

namespace {

NormalConeModel subspace_model(const std::vector<Eigen::MatrixXd>& gens) {
  NormalConeModel m;
  m.kind = ConeKind::LinearSubspace;
  m.basis = orthonormalize(gens);
  return m;
}

NormalConeModel psd_cone_model(const Eigen::MatrixXd& Xbar) {
  const auto D = decompose(Xbar, DecompMode::Eig);
  NormalConeModel m;
  m.kind = ConeKind::PsdConeAtPoint;
  m.P = D.left;
  m.beta = zero_value_indices(D.values);
  return m;
}

NormalConeModel ball_model(const ConstraintSet& S, const Eigen::MatrixXd& Xbar) {
  // Interior point: the cone is {0}.
  const double nrm = matrix_norm(Xbar, S.norm);
  NormalConeModel m;
  m.kind = ConeKind::LinearSubspace;
  if (nrm < S.radius - 1e-8 * (1.0 + S.radius)) return m;

  if (S.norm == NormKind::Frobenius) {
    m.basis = {Xbar / Xbar.norm()};
    m.ray_index = 0;
    return m;
  }

  // Factor pairs (u_i, v_i, s_i) with s_i = sigma_i nonincreasing. For the
  // symmetric space these come from the eigendecomposition so that the
  // generators stay symmetric.
  Eigen::MatrixXd U, V;
  Eigen::VectorXd sv;
  if (S.symmetric_space) {
    const auto D = decompose(Xbar, DecompMode::Eig);
    const Eigen::Index n = D.values.size();
    std::vector<int> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(D.values(a)) > std::abs(D.values(b));
    });
    U.resize(n, n);
    V.resize(n, n);
    sv.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const int i = order[k];
      U.col(k) = D.left.col(i);
      V.col(k) = (D.values(i) < 0 ? -1.0 : 1.0) * D.left.col(i);
      sv(k) = std::abs(D.values(i));
    }
  } else {
    const auto D = decompose(Xbar, DecompMode::Svd);
    U = D.left;
    V = D.right;
    sv = D.values;
  }

  if (S.norm == NormKind::Spectral) {
    // Span of the tied leading block { U_a S V_a^T : S symmetric }.
    const double top = sv(0);
    std::vector<int> a;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) >= top - 1e-8 * (1.0 + top)) a.push_back(static_cast<int>(i));
    std::vector<Eigen::MatrixXd> gens;
    for (size_t p = 0; p < a.size(); ++p)
      for (size_t q = p; q < a.size(); ++q)
        gens.push_back(0.5 * (U.col(a[p]) * V.col(a[q]).transpose() +
                              U.col(a[q]) * V.col(a[p]).transpose()));
    m.basis = orthonormalize(gens);
    return m;
  }

  // Nuclear ball: cone{ U1 V1^T + U_beta S V_beta^T : ||S|| <= 1 }. The
  // gradient part is a ray whose vanishing kills the slack block.
  const Eigen::Index rk = spectral::numeric_rank(sv);
  std::vector<Eigen::MatrixXd> gens;
  gens.push_back(U.leftCols(rk) * V.leftCols(rk).transpose());
  for (Eigen::Index i = rk; i < U.cols(); ++i)
    for (Eigen::Index j = S.symmetric_space ? i : rk; j < V.cols(); ++j) {
      if (S.symmetric_space)
        gens.push_back(0.5 * (U.col(i) * V.col(j).transpose() +
                              U.col(j) * V.col(i).transpose()));
      else
        gens.push_back(U.col(i) * V.col(j).transpose());
    }
  m.basis = orthonormalize(gens);
  m.ray_index = 0;
  m.slack_tied_to_ray = true;
  return m;
}

}  // namespace

NormalConeModel normal_cone_model(const ConstraintSet& S, const Eigen::MatrixXd& Xbar) {
  S.check_dims(Xbar);
  const double res = residual(S, Xbar);
  if (res > 1e-8 * (1.0 + Xbar.norm()))
    throw std::invalid_argument("normal_cone_model: point is not in the set (residual " +
                                std::to_string(res) + ")");

  NormalConeModel model;
  switch (S.family) {
    case SetFamily::NormBall:
      model = ball_model(S, Xbar);
      break;
    case SetFamily::FrobeniusSphere: {
      model.kind = ConeKind::LinearSubspace;
      model.basis = {Xbar / Xbar.norm()};  // the full line: the sphere is nonconvex
      break;
    }
    case SetFamily::PsdCone:
      return psd_cone_model(Xbar);
    case SetFamily::RankSet:
    case SetFamily::PsdRankSet: {
      const bool sym = S.family == SetFamily::PsdRankSet;
      const auto D = decompose(Xbar, sym ? DecompMode::Eig : DecompMode::Svd);
      Eigen::VectorXd sv = sym ? D.values.cwiseAbs() : D.values;
      std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
      const Eigen::Index rk = spectral::numeric_rank(sv);
      if (rk != S.rank)
        throw std::invalid_argument(
            "normal_cone_model: rank-set model needs numeric rank exactly r (the normal cone at "
            "rank-deficient points is not a subspace); point has rank " +
            std::to_string(rk));
      model.kind = ConeKind::RankSetAtPoint;
      const auto beta = zero_value_indices(sym ? Eigen::VectorXd(D.values.cwiseAbs()) : D.values);
      model.beta = beta;
      const Eigen::MatrixXd& Vfac = sym ? D.left : D.right;
      model.U_beta.resize(D.left.rows(), beta.size());
      model.V_beta.resize(Vfac.rows(), beta.size());
      for (size_t k = 0; k < beta.size(); ++k) {
        model.U_beta.col(k) = D.left.col(beta[k]);
        model.V_beta.col(k) = Vfac.col(beta[k]);
      }
      // Rectangular factors: the right kernel has extra directions.
      if (!sym && Xbar.cols() > Xbar.rows()) {
        const Eigen::Index extra = Xbar.cols() - Xbar.rows();
        Eigen::MatrixXd V2(Vfac.rows(), beta.size() + extra);
        V2.leftCols(beta.size()) = model.V_beta;
        V2.rightCols(extra) = Vfac.rightCols(extra);
        model.V_beta = V2;
      }
      return model;
    }
    case SetFamily::RowStochastic:
    case SetFamily::DoublyStochastic: {
      std::vector<Eigen::MatrixXd> gens;
      for (const auto& eq : S.equalities()) gens.push_back(eq.M);
      NormalConeModel orthant;
      orthant.kind = ConeKind::NonnegOrthantAtPoint;
      orthant.positive_mask = (Xbar.array() > 1e-10).matrix();
      model.kind = ConeKind::SumOfModels;
      model.parts = {subspace_model(gens), orthant};
      return model;
    }
    case SetFamily::BinaryQP: {
      std::vector<Eigen::MatrixXd> gens;
      for (const auto& eq : S.equalities()) gens.push_back(eq.M);
      model = subspace_model(gens);
      for (Eigen::Index i = 0; i < S.ineq_rhs.size(); ++i) {
        const double v = (S.ineq_mats[i].array() * Xbar.array()).sum() - S.ineq_rhs(i);
        if (std::abs(v) <= 1e-8 * (1.0 + std::abs(S.ineq_rhs(i))))
          model.cone_generators.push_back(0.5 *
                                          (S.ineq_mats[i] + S.ineq_mats[i].transpose()));
      }
      break;
    }
    default: {  // affine-defined families
      std::vector<Eigen::MatrixXd> gens;
      for (const auto& eq : S.equalities()) gens.push_back(eq.M);
      model = subspace_model(gens);
      break;
    }
  }

  if (S.psd_part && S.family != SetFamily::PsdRankSet && S.family != SetFamily::PsdCone) {
    NormalConeModel sum;
    sum.kind = ConeKind::SumOfModels;
    sum.parts = {model, psd_cone_model(Xbar)};
    return sum;
  }
  return model;
}

}  // namespace rankcalm::sets
