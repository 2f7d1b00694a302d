#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rankcalm/rng.hpp"

namespace rankcalm::sets {

enum class SetFamily {
  NormBall,
  FrobeniusSphere,
  PsdCone,
  RankSet,
  PsdRankSet,
  Correlation,
  TwoTrace,
  QuadDiag,
  BlockTrace,
  RowStochastic,
  DoublyStochastic,
  BinaryQP,
};

enum class NormKind { Spectral, Frobenius, Nuclear };

std::string family_name(SetFamily f);
std::string norm_name(NormKind k);

/// One linear equality <M, X> = rhs on the ambient matrix space.
struct LinearEquality {
  Eigen::MatrixXd M;
  double rhs;
};

/// A constraint family instance. Symmetric families with `psd_part` describe
/// Omega = Xi \cap S_+^n where Xi is the non-PSD remainder (affine rows,
/// inequalities, or a norm bound).
class ConstraintSet {
 public:
  SetFamily family;
  Eigen::Index rows = 0, cols = 0;
  bool symmetric_space = false;
  bool psd_part = false;

  NormKind norm = NormKind::Frobenius;
  double radius = 0.0;
  Eigen::Index rank = 0;  // RankSet / PsdRankSet

  Eigen::MatrixXd B, C;  // TwoTrace
  double b1 = 0.0, b2 = 0.0;

  Eigen::Index blocks = 0, block_size = 0;  // BlockTrace: rows = blocks * block_size

  std::vector<Eigen::MatrixXd> ineq_mats;  // BinaryQP
  Eigen::VectorXd ineq_rhs;

  static ConstraintSet norm_ball(NormKind k, double radius, Eigen::Index n, Eigen::Index m,
                                 bool symmetric = false, bool psd = false);
  static ConstraintSet frobenius_sphere(double radius, Eigen::Index n, Eigen::Index m,
                                        bool symmetric = false);
  static ConstraintSet psd_cone(Eigen::Index n);
  static ConstraintSet rank_set(Eigen::Index r, Eigen::Index n, Eigen::Index m);
  static ConstraintSet psd_rank_set(Eigen::Index r, Eigen::Index n);
  static ConstraintSet correlation(Eigen::Index n);
  static ConstraintSet two_trace(Eigen::MatrixXd B, Eigen::MatrixXd C, double b1, double b2);
  static ConstraintSet quad_diag(Eigen::Index n);
  static ConstraintSet block_trace(Eigen::Index k, Eigen::Index p);
  static ConstraintSet row_stochastic(Eigen::Index n);
  static ConstraintSet doubly_stochastic(Eigen::Index n);
  static ConstraintSet binary_qp(std::vector<Eigen::MatrixXd> A, Eigen::VectorXd b,
                                 Eigen::Index n_plus_1);

  void validate() const;
  void check_dims(const Eigen::MatrixXd& X) const;

  /// Copy with the PSD-cone part stripped (the Xi of Omega = Xi \cap S_+^n).
  ConstraintSet xi_part() const;

  bool is_convex() const;
  bool is_compact() const;
  /// Gamma_r = set \cap {rank <= r} is a finite set this library can enumerate.
  bool discrete_gamma(Eigen::Index r) const;
  /// Upper bound on ||X||_F over the family (used as a divergence guard).
  double max_frobenius() const;

  /// Linear equality part (empty for norm-defined families).
  std::vector<LinearEquality> equalities() const;
  bool has_orthant() const;  // RowStochastic / DoublyStochastic nonneg part
};

// --- membership and projections ------------------------------------------------

/// 0 iff X lies in the set (within 1e-9 scaled); otherwise a nonnegative
/// violation built from norm excess, equality residual norms, inequality
/// excess, orthant deficit and eigenvalue deficit.
double residual(const ConstraintSet& S, const Eigen::MatrixXd& X);

/// Truncated SVD; the best rank-r approximation in Frobenius and in nuclear norm.
Eigen::MatrixXd project_rank(const Eigen::MatrixXd& X, Eigen::Index r);

/// P Diag(max(lambda_i,0) for i <= r, 0 past r) P^T.
Eigen::MatrixXd project_psd_rank(const Eigen::MatrixXd& X, Eigen::Index r);

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& X);

struct DykstraOptions {
  int max_iters = 5000;
  double tol = 1e-9;
};

struct ProxOp {
  std::string name;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply;
};

/// Cyclic Dykstra over proximable pieces. Throws on non-convergence with the
/// final change norm in the message.
Eigen::MatrixXd dykstra(const Eigen::MatrixXd& X0, const std::vector<ProxOp>& ops,
                        const DykstraOptions& opts = {});

/// Proximable pieces whose intersection is S (convex families only).
std::vector<ProxOp> prox_components(const ConstraintSet& S);

/// Frobenius projection onto S; closed form where available, Dykstra otherwise.
Eigen::MatrixXd project_set(const ConstraintSet& S, const Eigen::MatrixXd& X, double tol = 1e-9);

// --- distances -------------------------------------------------------------------

double dist_to_rank(const Eigen::MatrixXd& X, Eigen::Index r);
double dist_to_psd_rank(const Eigen::MatrixXd& X, Eigen::Index r);
double dist_to_psd(const Eigen::MatrixXd& X);
double dist_to_set(const ConstraintSet& S, const Eigen::MatrixXd& X, double tol = 1e-9);

enum class GammaMethod { Alternating, Enumerate };

struct GammaOptions {
  GammaMethod method = GammaMethod::Alternating;
  int restarts = 32;
  std::uint64_t seed = 0;
  double tol = 1e-11;
  int max_iters = 4000;
  double feas_tol = 1e-7;
};

/// Upper estimate of dist(X, S \cap {rank <= r}). Enumerate is exact on
/// discrete instances; Alternating runs multi-start alternating projections
/// (perturbation radii 0.1/0.5/1.0 of ||X||_F) and keeps the best candidate.
double dist_to_gamma(const ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& X,
                     const GammaOptions& opts = {});

/// The finite Gamma_r of a discrete instance.
std::vector<Eigen::MatrixXd> enumerate_gamma(const ConstraintSet& S, Eigen::Index r);

// --- normal-cone models ----------------------------------------------------------

enum class ConeKind {
  LinearSubspace,
  PsdConeAtPoint,
  NonnegOrthantAtPoint,
  RankSetAtPoint,
  SumOfModels,
};

/// Constructive model of the normal cone at a point, in the shape the
/// criterion checkers consume.
struct NormalConeModel {
  ConeKind kind;

  // LinearSubspace: orthonormal basis matrices. For norm balls the span
  // over-approximates the cone: basis[ray_index] is the gradient-part
  // generator whose coefficient must be >= 0, and when slack_tied_to_ray is
  // set the remaining coefficients vanish whenever that one does.
  std::vector<Eigen::MatrixXd> basis;
  std::optional<int> ray_index;
  bool slack_tied_to_ray = false;

  // PsdConeAtPoint / RankSetAtPoint
  Eigen::MatrixXd P;          // eigenvector factor (psd) or left factor U (rank)
  std::vector<int> beta;      // indices of (numerically) zero values
  Eigen::MatrixXd U_beta, V_beta;

  // NonnegOrthantAtPoint: true where Xbar_ij > 0 (normal entries vanish there).
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> positive_mask;

  // Active inequality normals; they enter the cone with nonnegative weights.
  std::vector<Eigen::MatrixXd> cone_generators;

  std::vector<NormalConeModel> parts;  // SumOfModels

  int subspace_dim() const;
};

/// Model of N_S(Xbar). Requires Xbar in S within 1e-8 (scaled); a RankSet
/// model additionally requires numeric rank exactly r.
NormalConeModel normal_cone_model(const ConstraintSet& S, const Eigen::MatrixXd& Xbar);

/// beta = { i : |value_i| <= 1e-8 * (1 + value_max) }.
std::vector<int> zero_value_indices(const Eigen::VectorXd& values);

// --- small linear-algebra helpers ------------------------------------------------

/// Columns span ker A (thin); empty matrix when the kernel is trivial.
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& A, double tol = 1e-10);

/// Gram-Schmidt over vectorized matrices; drops dependent ones.
std::vector<Eigen::MatrixXd> orthonormalize(const std::vector<Eigen::MatrixXd>& mats,
                                            double tol = 1e-12);

/// Least-squares projection onto the affine set {<M_j, X> = rhs_j}.
Eigen::MatrixXd project_affine(const std::vector<LinearEquality>& eqs, const Eigen::MatrixXd& X);

/// Projection of each row onto the probability simplex.
Eigen::MatrixXd project_row_simplex(const Eigen::MatrixXd& X);

Eigen::VectorXd simplex_projection(const Eigen::VectorXd& v);

}  // namespace rankcalm::sets
