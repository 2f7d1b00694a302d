#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankcalm/sets.hpp"

namespace rankcalm::penalty {

enum class ObjectiveKind { LeastSquares, Linear };

/// Smooth objective: 0.5 sum_i (<M_i,X> - b_i)^2 or <C,X>, plus an optional
/// mu/2 ||X||_F^2 Tikhonov term.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::Linear;
  std::vector<Eigen::MatrixXd> ops;  // least-squares measurement matrices
  Eigen::VectorXd rhs;
  Eigen::MatrixXd C;
  double mu = 0.0;

  double value(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& X) const;
  /// Lipschitz constant of the gradient; 50 power-iteration steps for the
  /// least-squares normal operator.
  double smoothness() const;
  /// Lower bound of the objective over the family, -inf when unavailable.
  double lower_bound(const sets::ConstraintSet& S) const;

  static Objective linear(Eigen::MatrixXd C);
  static Objective least_squares(std::vector<Eigen::MatrixXd> ops, Eigen::VectorXd rhs);
  Objective with_tikhonov(double mu) const;
};

struct ProblemSpec {
  Objective f;
  sets::ConstraintSet set;
  Eigen::Index r = 1;
  double nu = 0.0;  // rank-regularized weight (surrogate module)
};

enum class PenaltyKind { DcKyfan, SchattenP, TruncatedDiff };

std::string penalty_kind_name(PenaltyKind k);

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::DcKyfan;
  double p = 0.5;  // Schatten exponent in (0,1)
  double rho = 1.0;
  std::vector<double> rho_schedule;
  double step = 0.0;  // 0: auto, 0.95 / max(L, tiny)
  double inner_tol = 1e-8;
  double outer_tol = 1e-10;
  int max_iters = 500;
  double eps_smooth = 1e-6;  // Schatten smoothing, halved per continuation stage

  void validate() const;
};

/// f(X) + rho * (theta_r | schatten tail | eta_r), by kind.
double penalty_value(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& X);
/// The penalty term alone (without f, without rho).
double penalty_term(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& X);

/// Concave-part linearization at X_k: the subproblem is the composite prox of
/// step*rho_eff*||.||_* + delta_Omega at X_k - step*(grad f - rho*W).
struct DcLinearization {
  Eigen::MatrixXd W;
  double rho_eff;
};
DcLinearization linearize_penalty(const ProblemSpec& P, const PenaltyConfig& C,
                                  const Eigen::MatrixXd& Xk);

/// prox of lambda*||.||_* + delta_S via the two-block Dykstra splitting.
Eigen::MatrixXd composite_prox(const Eigen::MatrixXd& G, double lambda,
                               const sets::ConstraintSet& S, double tol);

/// One DC majorization step. `step` <= 1/L; on an objective increase the
/// caller halves it.
Eigen::MatrixXd dc_step(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& Xk,
                        double step, double inner_tol);

struct SolveIterate {
  double objective;     // f + rho * term
  double penalty_term;  // rho * term
  double theta;
  double step;
  Eigen::Index rank;
};

struct SolveTrace {
  std::vector<SolveIterate> iterates;
  Eigen::MatrixXd X;
  Eigen::Index final_rank = 0;
  bool converged = false;
  int step_halvings = 0;
  bool local_probe_passed = true;  // 16-direction descent probe at feasible outputs
};

/// Outer DC loop with monotone total objective and a divergence guard.
SolveTrace solve(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& X0,
                 std::uint64_t seed = 0);

/// Best-of-N solve from X0 plus projected gaussian starts.
SolveTrace solve_multistart(const ProblemSpec& P, const PenaltyConfig& C,
                            const Eigen::MatrixXd& X0, int starts, std::uint64_t seed);

struct ContinuationEntry {
  double rho;
  double objective;  // f at the entry's best point
  double theta;
  Eigen::Index rank;
  double sigma_tail;  // sigma_{r+1}: the Schatten mechanism drives it below 1
};

struct ExactPenaltyReport {
  std::vector<ContinuationEntry> entries;
  std::optional<double> threshold_rho;  // smallest schedule rho with rank <= r
  double final_objective = 0.0;
  Eigen::MatrixXd X;
  bool achieved = false;
  std::optional<double> oracle_objective;
};

/// Warm-started solves along the rho schedule. When the instance is
/// enumerable the constrained optimum is attached for comparison.
ExactPenaltyReport rho_continuation(const ProblemSpec& P, const PenaltyConfig& C,
                                    const Eigen::MatrixXd& X0, int starts = 1,
                                    std::uint64_t seed = 0);

/// min f over the finite Gamma_r, when enumerable.
std::optional<double> enumeration_oracle(const ProblemSpec& P);

}  // namespace rankcalm::penalty
