#include "rankcalm/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rankcalm/rng.hpp"
#include "rankcalm/spectral.hpp"

namespace rankcalm::penalty {

using rankcalm::sets::ConstraintSet;
using rankcalm::spectral::DecompMode;
using rankcalm::spectral::decompose;

std::string penalty_kind_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::DcKyfan: return "dc-kyfan";
    case PenaltyKind::SchattenP: return "schatten-p";
    case PenaltyKind::TruncatedDiff: return "truncated-diff";
  }
  return "?";
}

// --- objective -------------------------------------------------------------------

Objective Objective::linear(Eigen::MatrixXd C) {
  Objective f;
  f.kind = ObjectiveKind::Linear;
  f.C = std::move(C);
  return f;
}

Objective Objective::least_squares(std::vector<Eigen::MatrixXd> ops, Eigen::VectorXd rhs) {
  if (rhs.size() != static_cast<Eigen::Index>(ops.size()))
    throw std::invalid_argument("objective: one rhs entry per measurement matrix");
  Objective f;
  f.kind = ObjectiveKind::LeastSquares;
  f.ops = std::move(ops);
  f.rhs = std::move(rhs);
  return f;
}

Objective Objective::with_tikhonov(double mu_) const {
  if (mu_ < 0.0) throw std::invalid_argument("objective: mu must be >= 0");
  Objective f = *this;
  f.mu = mu_;
  return f;
}

double Objective::value(const Eigen::MatrixXd& X) const {
  double v = 0.0;
  if (kind == ObjectiveKind::Linear) {
    v = (C.array() * X.array()).sum();
  } else {
    for (size_t i = 0; i < ops.size(); ++i) {
      const double ri = (ops[i].array() * X.array()).sum() - rhs(static_cast<Eigen::Index>(i));
      v += 0.5 * ri * ri;
    }
  }
  if (mu > 0.0) v += 0.5 * mu * X.squaredNorm();
  return v;
}

Eigen::MatrixXd Objective::gradient(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd g;
  if (kind == ObjectiveKind::Linear) {
    g = C;
  } else {
    g = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    for (size_t i = 0; i < ops.size(); ++i) {
      const double ri = (ops[i].array() * X.array()).sum() - rhs(static_cast<Eigen::Index>(i));
      g += ri * ops[i];
    }
  }
  if (mu > 0.0) g += mu * X;
  return g;
}

double Objective::smoothness() const {
  double L = 0.0;
  if (kind == ObjectiveKind::LeastSquares && !ops.empty()) {
    // Power iteration on X -> sum_i <M_i, X> M_i.
    Eigen::MatrixXd V = Eigen::MatrixXd::Ones(ops[0].rows(), ops[0].cols());
    V /= V.norm();
    for (int it = 0; it < 50; ++it) {
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(V.rows(), V.cols());
      for (const auto& M : ops) W += (M.array() * V.array()).sum() * M;
      const double nrm = W.norm();
      if (nrm < 1e-300) break;
      L = nrm;
      V = W / nrm;
    }
  }
  return L + mu;
}

double Objective::lower_bound(const ConstraintSet& S) const {
  if (kind == ObjectiveKind::LeastSquares) return 0.0;
  const double R = S.max_frobenius();
  if (!std::isfinite(R)) return -std::numeric_limits<double>::infinity();
  return -C.norm() * R;  // mu-term is nonnegative
}

// --- penalty values ---------------------------------------------------------------

void PenaltyConfig::validate() const {
  if (rho < 0.0) throw std::invalid_argument("penalty: rho must be >= 0");
  if (kind == PenaltyKind::SchattenP && (p <= 0.0 || p >= 1.0))
    throw std::invalid_argument("penalty: p must lie in (0,1)");
  if (inner_tol <= 0.0 || outer_tol <= 0.0)
    throw std::invalid_argument("penalty: tolerances must be positive");
  for (size_t i = 1; i < rho_schedule.size(); ++i)
    if (rho_schedule[i] <= rho_schedule[i - 1])
      throw std::invalid_argument("penalty: rho schedule must be strictly increasing");
}

double penalty_term(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& X) {
  switch (C.kind) {
    case PenaltyKind::DcKyfan: return spectral::rank_residual(X, P.r);
    case PenaltyKind::SchattenP: return spectral::schatten_tail(X, P.r, C.p);
    case PenaltyKind::TruncatedDiff: return spectral::truncated_residual(X, P.r).second;
  }
  return 0.0;
}

double penalty_value(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& X) {
  return P.f.value(X) + C.rho * penalty_term(P, C, X);
}

// --- DC machinery -----------------------------------------------------------------

DcLinearization linearize_penalty(const ProblemSpec& P, const PenaltyConfig& C,
                                  const Eigen::MatrixXd& Xk) {
  const auto D = decompose(Xk, DecompMode::Svd);
  DcLinearization lin;
  switch (C.kind) {
    case PenaltyKind::DcKyfan:
      lin.W = spectral::kyfan_subgradient(D, P.r);
      lin.rho_eff = C.rho;
      break;
    case PenaltyKind::TruncatedDiff:
      lin.W = spectral::hr_subgradient(D, P.r);
      lin.rho_eff = C.rho;
      break;
    case PenaltyKind::SchattenP: {
      // Reweighted majorization sigma^p <= w*sigma + const at sigma_k + eps;
      // the nondecreasing tail weights are folded into a single nuclear-norm
      // coefficient w_n and a convex head correction.
      const Eigen::Index n = D.values.size();
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = P.r; i < n; ++i)
        w(i) = C.p * std::pow(D.values(i) + C.eps_smooth, C.p - 1.0);
      const double wmax = w(n - 1);
      Eigen::VectorXd u(n);
      for (Eigen::Index i = 0; i < n; ++i) u(i) = (i < P.r) ? wmax : wmax - w(i);
      lin.W = D.left * u.asDiagonal() * D.right.leftCols(n).transpose();
      lin.rho_eff = C.rho * wmax;
      break;
    }
  }
  return lin;
}

Eigen::MatrixXd composite_prox(const Eigen::MatrixXd& G_in, double lambda,
                               const ConstraintSet& S, double tol) {
  // For a symmetric feasible set only the symmetric part of the drift enters
  // the subproblem, and a symmetric start keeps every cycle symmetric.
  const Eigen::MatrixXd G =
      S.symmetric_space ? Eigen::MatrixXd(0.5 * (G_in + G_in.transpose())) : G_in;
  const auto svt = [lambda](const Eigen::MatrixXd& Z) {
    const auto D = decompose(Z, DecompMode::Svd);
    const Eigen::VectorXd s = (D.values.array() - lambda).max(0.0);
    return Eigen::MatrixXd(D.left * s.asDiagonal() *
                           D.right.leftCols(s.size()).transpose());
  };
  // One flat Dykstra cycle over the thresholding prox and the set pieces.
  std::vector<sets::ProxOp> ops;
  ops.push_back({"svt", svt});
  for (auto& op : sets::prox_components(S)) ops.push_back(std::move(op));
  sets::DykstraOptions opts;
  opts.tol = tol;
  opts.max_iters = 20000;
  return sets::dykstra(G, ops, opts);
}

Eigen::MatrixXd dc_step(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& Xk,
                        double step, double inner_tol) {
  if (!P.set.is_convex())
    throw std::invalid_argument("dc_step: the subproblem needs a convex set (" +
                                sets::family_name(P.set.family) + " is not)");
  const DcLinearization lin = linearize_penalty(P, C, Xk);
  const Eigen::MatrixXd G = Xk - step * (P.f.gradient(Xk) - C.rho * lin.W);
  return composite_prox(G, step * lin.rho_eff, P.set, inner_tol);
}

SolveTrace solve(const ProblemSpec& P, const PenaltyConfig& C, const Eigen::MatrixXd& X0,
                 std::uint64_t seed) {
  C.validate();
  P.set.check_dims(X0);
  const double L = P.f.smoothness();
  // The auto step also caps the thresholding level rho * step of the inner
  // prox, which keeps the Dykstra subproblems well conditioned at large rho.
  double step = C.step > 0.0 ? C.step : 0.95 / std::max({L, C.rho, 1e-8});
  const double lb = P.f.lower_bound(P.set);

  SolveTrace tr;
  Eigen::MatrixXd X = sets::project_set(P.set, X0);
  double F = penalty_value(P, C, X);
  tr.iterates.push_back({F, C.rho * penalty_term(P, C, X), spectral::rank_residual(X, P.r), step,
                         spectral::numeric_rank(X)});

  double inner = C.inner_tol;
  for (int k = 0; k < C.max_iters; ++k) {
    Eigen::MatrixXd Xn;
    double Fn = 0.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {  // step halving on non-descent
      Xn = dc_step(P, C, X, step, inner);
      Fn = penalty_value(P, C, Xn);
      if (Fn <= F + 1e-12) {  // matches the trace monotonicity slack
        accepted = true;
        break;
      }
      step *= 0.5;
      ++tr.step_halvings;
    }
    if (!accepted) break;
    const double decrease = F - Fn;
    X = Xn;
    F = Fn;
    tr.iterates.push_back({F, C.rho * penalty_term(P, C, X), spectral::rank_residual(X, P.r),
                           step, spectral::numeric_rank(X)});
    if (std::isfinite(lb) && F < lb - 1e-6)
      throw std::runtime_error("solve: objective fell below its lower bound (" +
                               std::to_string(F) + " < " + std::to_string(lb) + ")");
    inner = std::max(std::min(C.inner_tol, 0.1 * std::max(decrease, 0.0)), 1e-13);
    if (decrease <= C.outer_tol * (1.0 + std::abs(F))) {
      tr.converged = true;
      break;
    }
  }

  tr.X = X;
  tr.final_rank = spectral::numeric_rank(X);

  // Local-descent probe at feasible outputs: 16 random feasible perturbations
  // must not beat the returned point by more than the tolerance.
  if (tr.final_rank <= P.r) {
    Rng rng(splitmix64(seed ^ 0x70b5ULL));
    const double h = 0.01 * (1.0 + X.norm());
    for (int j = 0; j < 16; ++j) {
      Eigen::MatrixXd G = P.set.symmetric_space ? rng.gaussian_symmetric(X.rows())
                                                : rng.gaussian_matrix(X.rows(), X.cols());
      const Eigen::MatrixXd Z = sets::project_set(P.set, X + h * (G / std::max(G.norm(), 1e-12)));
      if (penalty_value(P, C, Z) < F - 1e-8) {
        tr.local_probe_passed = false;
        break;
      }
    }
  }
  return tr;
}

SolveTrace solve_multistart(const ProblemSpec& P, const PenaltyConfig& C,
                            const Eigen::MatrixXd& X0, int starts, std::uint64_t seed) {
  SolveTrace best;
  double best_val = std::numeric_limits<double>::infinity();
  Rng root(seed);
  for (int s = 0; s < std::max(starts, 1); ++s) {
    Eigen::MatrixXd start = X0;
    if (s > 0) {
      Rng rng = root.child(static_cast<std::uint64_t>(s));
      start = P.set.symmetric_space ? rng.gaussian_symmetric(P.set.rows)
                                    : rng.gaussian_matrix(P.set.rows, P.set.cols);
    }
    SolveTrace tr = solve(P, C, start, splitmix64(seed + s));
    const double v = tr.iterates.back().objective;
    if (v < best_val) {
      best_val = v;
      best = std::move(tr);
    }
  }
  return best;
}

std::optional<double> enumeration_oracle(const ProblemSpec& P) {
  if (!P.set.discrete_gamma(P.r)) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& X : sets::enumerate_gamma(P.set, P.r)) best = std::min(best, P.f.value(X));
  return best;
}

ExactPenaltyReport rho_continuation(const ProblemSpec& P, const PenaltyConfig& C,
                                    const Eigen::MatrixXd& X0, int starts, std::uint64_t seed) {
  C.validate();
  if (C.rho_schedule.empty())
    throw std::invalid_argument("rho_continuation: empty schedule");
  ExactPenaltyReport rep;
  rep.oracle_objective = enumeration_oracle(P);
  Eigen::MatrixXd warm = X0;
  for (size_t i = 0; i < C.rho_schedule.size(); ++i) {
    PenaltyConfig Ci = C;
    Ci.rho = C.rho_schedule[i];
    Ci.eps_smooth = C.eps_smooth * std::pow(0.5, static_cast<double>(i));
    const SolveTrace tr = solve_multistart(P, Ci, warm, starts, splitmix64(seed ^ (i + 1)));
    warm = tr.X;
    ContinuationEntry e;
    e.rho = Ci.rho;
    e.objective = P.f.value(tr.X);
    e.theta = spectral::rank_residual(tr.X, P.r);
    e.rank = tr.final_rank;
    const Eigen::VectorXd sv = spectral::singular_values(tr.X);
    e.sigma_tail = P.r < sv.size() ? sv(P.r) : 0.0;
    rep.entries.push_back(e);
    if (!rep.threshold_rho && e.rank <= P.r) {
      rep.threshold_rho = e.rho;
      rep.final_objective = e.objective;
      rep.X = tr.X;
      rep.achieved = true;
    }
  }
  if (!rep.achieved && !rep.entries.empty()) {
    rep.final_objective = rep.entries.back().objective;
    rep.X = warm;
  }
  return rep;
}

}  // namespace rankcalm::penalty
