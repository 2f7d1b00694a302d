#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rankcalm/penalty.hpp"

namespace rankcalm::surrogate {

enum class PhiKind { Linear, QuadShift, PiecewiseConvex };
enum class ConjugateMode { Closed, Numeric };

/// Convex building block phi on [0,1] with phi(t_star) = 0 and phi(1) = 1.
/// psi restricts phi to [0,1]; psi*(s) = max_{t in [0,1]} { s t - phi(t) }.
struct SurrogateFamily {
  PhiKind kind = PhiKind::Linear;
  double t_star = 0.0;
  std::vector<std::pair<double, double>> knots;  // piecewise-linear (t, phi(t))

  double phi(double t) const;
  bool has_closed_conjugate() const { return kind != PhiKind::PiecewiseConvex; }
  double psi_star(double s, ConjugateMode mode = ConjugateMode::Closed) const;
  /// Midpoint of the subdifferential of psi* at s (a maximizing t).
  double psi_star_subgradient(double s) const;

  /// Grid validation of convexity, phi(t_star) = 0 and phi(1) = 1.
  void validate() const;

  static SurrogateFamily linear();      // phi(t) = t,          t* = 0
  static SurrogateFamily quad_shift();  // phi(t) = (t^2+t)/2,  t* = 0
  static SurrogateFamily piecewise(std::vector<std::pair<double, double>> knots, double t_star);

  std::string name() const;
};

/// f(X) + nu * rho * [ ||X||_* - rho^{-1} sum_i psi*(rho sigma_i(X)) ].
double surrogate_objective(const penalty::ProblemSpec& P, const SurrogateFamily& F, double rho,
                           const Eigen::MatrixXd& X);

/// The surrogate term alone: sum_i [ rho sigma_i - psi*(rho sigma_i) ] * nu / 1.
double surrogate_term(const SurrogateFamily& F, double rho, const Eigen::VectorXd& sigma);

struct MpecPoint {
  Eigen::MatrixXd X, W;
};

/// objective = f(X) + nu * sum_i phi(sigma_i(W)); residual = ||X||_* - <W,X>.
/// Throws when ||W|| exceeds 1 beyond tolerance.
std::pair<double, double> mpec_evaluate(const penalty::ProblemSpec& P, const SurrogateFamily& F,
                                        const MpecPoint& pt);

/// W = U diag(1,..,1, t*,..,t*) V^T split at the numeric rank of X; the lifted
/// pair has zero residual and sum_i phi(sigma_i(W)) = rank(X).
MpecPoint lift_to_mpec(const Eigen::MatrixXd& X, const SurrogateFamily& F,
                       double rank_eps = 1e-8);

struct EquivalenceEntry {
  double rho;
  double surrogate_value;    // best surrogate objective found
  double regularized_value;  // f + nu * rank at the same point
  Eigen::Index rank;
  bool matches;
};

struct EquivalenceReport {
  std::vector<EquivalenceEntry> entries;
  std::optional<double> matched_rho;
  double oracle_value = 0.0;
  Eigen::Index oracle_rank = 0;
};

/// DCA minimization of the surrogate along the rho schedule with multi-start,
/// compared against a small-instance oracle of f + nu * rank over the set.
/// Refuses families without an oracle.
EquivalenceReport equivalence_report(const penalty::ProblemSpec& P, const SurrogateFamily& F,
                                     const std::vector<double>& rho_schedule, int starts,
                                     std::uint64_t seed);

/// Oracle for the rank-regularized optimum; available for nu = 0 and for the
/// one-parameter correlation instance (n = 2).
std::optional<std::pair<double, Eigen::Index>> regularized_oracle(const penalty::ProblemSpec& P);

/// One multi-start DCA minimization of the surrogate at fixed rho.
std::pair<double, Eigen::MatrixXd> minimize_surrogate(const penalty::ProblemSpec& P,
                                                      const SurrogateFamily& F, double rho,
                                                      int starts, std::uint64_t seed,
                                                      int max_iters = 300);

}  // namespace rankcalm::surrogate
