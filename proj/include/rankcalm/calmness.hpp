#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankcalm/sets.hpp"

namespace rankcalm::calmness {

enum class Outcome { TrivialIntersection, WitnessFound, Inconclusive };
enum class Method { Nullspace, Lp };

std::string outcome_name(Outcome o);
std::string method_name(Method m);

/// Result of a cone-intersection check at a point. A witness, when present,
/// has unit Frobenius norm and passes the membership residual checks at 1e-8.
struct Certificate {
  Outcome outcome = Outcome::Inconclusive;
  Method method = Method::Nullspace;
  std::optional<Eigen::MatrixXd> witness;
  int omega_model_dim = 0;
  int rank_model_dim = 0;
  int intersection_dim = 0;
  double lp_optimum = 0.0;
  std::string explanation;
};

/// Trivial-intersection test of (-N_Omega(Xbar)) with the rank-set normal
/// space at Xbar. Requires Xbar in Gamma_r within 1e-8; numeric rank below r
/// yields Inconclusive (the constructive model only covers the rank-r case).
Certificate check_criterion1(const sets::ConstraintSet& omega, Eigen::Index r,
                             const Eigen::MatrixXd& Xbar,
                             std::optional<Method> force_method = std::nullopt);

/// Variant for Omega = Xi \cap S_+^n: tests (-N_Xi(Xbar)) against the sum of
/// the PSD-cone and rank-set normals, which for affine Xi reduces to the null
/// space of y -> A*(y) Xbar.
Certificate check_criterion2(const sets::ConstraintSet& xi, Eigen::Index r,
                             const Eigen::MatrixXd& Xbar,
                             std::optional<Method> force_method = std::nullopt);

/// Residual-based witness validation used on every returned certificate.
bool verify_witness(const sets::ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& Xbar,
                    const Eigen::MatrixXd& H, int criterion, double tol = 1e-8);

// --- empirical moduli ---------------------------------------------------------

struct SampleSpec {
  int samples = 1000;
  std::uint64_t seed = 0;
  double scale = 1.0;          // gaussian scale before projection
  double region_radius = 0.0;  // 0: auto (10 sqrt(n)); used for noncompact sets
  int gamma_restarts = 32;
};

struct ModulusReport {
  int samples_used = 0;
  int samples_skipped = 0;
  double kappa_hat = 0.0;
  std::array<double, 10> ratio_deciles{};  // max ratio per residual decile, ascending residual
  std::array<int, 10> decile_counts{};
  Eigen::MatrixXd worst_sample;
  double worst_ratio = 0.0;
  std::uint64_t seed = 0;
  bool noncompact_warning = false;
  double delta = 0.0;               // local variant only
  std::vector<double> sample_residuals;  // used samples in index order
  std::vector<double> sample_ratios;
};

/// Samples Omega by projecting ambient gaussians, records
/// dist(X, Gamma_r) / theta_r(X) over samples with theta_r > 1e-10 and returns
/// the empirical sup with a residual-decile profile.
ModulusReport estimate_global_modulus(const sets::ConstraintSet& omega, Eigen::Index r,
                                      const SampleSpec& spec);

/// Samples the ball B(Xbar, delta) and returns the empirical sup of
/// dist(X, Gamma_r) / (dist(X, Omega) + dist(X, Lambda_r)), with the
/// Xi / PSD-rank variant for PSD-intersected families. Denominator floor 1e-12.
ModulusReport estimate_local_ebound(const sets::ConstraintSet& omega, Eigen::Index r,
                                    const Eigen::MatrixXd& Xbar, double delta, int samples,
                                    std::uint64_t seed);

// --- feasibility by proximal alternating minimization -----------------------------

struct PamOptions {
  double c = 0.5;  // proximal weight; 0 gives plain alternating projections
  double tol = 1e-10;
  int max_iters = 5000;
  double project_tol = 1e-11;
};

struct PamTrace {
  std::vector<double> dist;  // ||X_k - Y_k||_F per iteration
  Eigen::MatrixXd X, Y;
  bool converged = false;
  double fitted_rate = 0.0;  // geometric rate fitted on the last <= 20 iterations
  int iterations = 0;
  std::string diagnostic;
};

/// Alternating proximal steps between the set (or its Xi part when PSD-
/// intersected, paired with the PSD rank set) and the rank constraint.
/// Distances are nonincreasing for c >= 0.
PamTrace pam_feasibility(const sets::ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& X0,
                         const PamOptions& opts = {});

}  // namespace rankcalm::calmness
