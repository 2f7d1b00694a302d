#include "rankcalm/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rankcalm/matrix.hpp"
#include "rankcalm/rng.hpp"
#include "rankcalm/spectral.hpp"

namespace rankcalm::surrogate {

using penalty::ProblemSpec;
using rankcalm::sets::ConstraintSet;
using rankcalm::sets::SetFamily;
using rankcalm::spectral::DecompMode;
using rankcalm::spectral::decompose;

SurrogateFamily SurrogateFamily::linear() {
  SurrogateFamily f;
  f.kind = PhiKind::Linear;
  f.t_star = 0.0;
  f.validate();
  return f;
}

SurrogateFamily SurrogateFamily::quad_shift() {
  SurrogateFamily f;
  f.kind = PhiKind::QuadShift;
  f.t_star = 0.0;
  f.validate();
  return f;
}

SurrogateFamily SurrogateFamily::piecewise(std::vector<std::pair<double, double>> knots,
                                           double t_star) {
  SurrogateFamily f;
  f.kind = PhiKind::PiecewiseConvex;
  f.knots = std::move(knots);
  f.t_star = t_star;
  std::sort(f.knots.begin(), f.knots.end());
  f.validate();
  return f;
}

std::string SurrogateFamily::name() const {
  switch (kind) {
    case PhiKind::Linear: return "linear";
    case PhiKind::QuadShift: return "quad-shift";
    case PhiKind::PiecewiseConvex: return "piecewise";
  }
  return "?";
}

double SurrogateFamily::phi(double t) const {
  switch (kind) {
    case PhiKind::Linear: return t;
    case PhiKind::QuadShift: return 0.5 * (t * t + t);
    case PhiKind::PiecewiseConvex: {
      if (knots.size() < 2) throw std::logic_error("piecewise family needs >= 2 knots");
      if (t <= knots.front().first) {
        const auto& [t0, v0] = knots[0];
        const auto& [t1, v1] = knots[1];
        return v0 + (v1 - v0) / (t1 - t0) * (t - t0);
      }
      for (size_t k = 1; k < knots.size(); ++k) {
        if (t <= knots[k].first) {
          const auto& [t0, v0] = knots[k - 1];
          const auto& [t1, v1] = knots[k];
          return v0 + (v1 - v0) / (t1 - t0) * (t - t0);
        }
      }
      const auto& [t0, v0] = knots[knots.size() - 2];
      const auto& [t1, v1] = knots.back();
      return v0 + (v1 - v0) / (t1 - t0) * (t - t0);
    }
  }
  return 0.0;
}

void SurrogateFamily::validate() const {
  if (t_star < 0.0 || t_star > 1.0)
    throw std::invalid_argument("surrogate family: t* must lie in [0,1]");
  if (std::abs(phi(t_star)) > 1e-9)
    throw std::invalid_argument("surrogate family: phi(t*) must be 0");
  if (std::abs(phi(1.0) - 1.0) > 1e-9)
    throw std::invalid_argument("surrogate family: phi(1) must be 1");
  const int grid = 1000;
  double prev2 = phi(0.0), prev1 = phi(1.0 / grid);
  for (int k = 2; k <= grid; ++k) {
    const double cur = phi(static_cast<double>(k) / grid);
    if (prev1 > 0.5 * (prev2 + cur) + 1e-9)
      throw std::invalid_argument("surrogate family: phi fails midpoint convexity on the grid");
    if (cur < -1e-9)
      throw std::invalid_argument("surrogate family: phi must be nonnegative on [0,1]");
    prev2 = prev1;
    prev1 = cur;
  }
}

namespace {

// Golden-section maximization of the concave map t -> s t - phi(t) on [0,1].
std::pair<double, double> conjugate_numeric(const SurrogateFamily& F, double s) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = 1.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  const auto g = [&](double t) { return s * t - F.phi(t); };
  double gc = g(c), gd = g(d);
  while (b - a > 1e-12) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - gr * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + gr * (b - a);
      gd = g(d);
    }
  }
  const double t = 0.5 * (a + b);
  // Endpoints can strictly dominate the interior bracket.
  double best_t = t, best = g(t);
  if (g(0.0) > best) best = g(0.0), best_t = 0.0;
  if (g(1.0) > best) best = g(1.0), best_t = 1.0;
  return {best, best_t};
}

}  // namespace

double SurrogateFamily::psi_star(double s, ConjugateMode mode) const {
  if (s < 0.0) throw std::invalid_argument("psi_star: s must be >= 0");
  if (mode == ConjugateMode::Numeric || !has_closed_conjugate())
    return conjugate_numeric(*this, s).first;
  switch (kind) {
    case PhiKind::Linear: return std::max(s - 1.0, 0.0);
    case PhiKind::QuadShift: {
      if (s <= 0.5) return 0.0;
      if (s >= 1.5) return s - 1.0;
      const double z = 2.0 * s - 1.0;
      return z * z / 8.0;
    }
    default: return conjugate_numeric(*this, s).first;
  }
}

double SurrogateFamily::psi_star_subgradient(double s) const {
  if (s < 0.0) throw std::invalid_argument("psi_star_subgradient: s must be >= 0");
  switch (kind) {
    case PhiKind::Linear:
      if (s < 1.0) return 0.0;
      if (s > 1.0) return 1.0;
      return 0.5;  // midpoint of [0,1]
    case PhiKind::QuadShift:
      if (s <= 0.5) return 0.0;
      if (s >= 1.5) return 1.0;
      return s - 0.5;
    case PhiKind::PiecewiseConvex:
      return conjugate_numeric(*this, s).second;
  }
  return 0.0;
}

double surrogate_term(const SurrogateFamily& F, double rho, const Eigen::VectorXd& sigma) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = rho * sigma(i);
    acc += s - F.psi_star(s, F.has_closed_conjugate() ? ConjugateMode::Closed
                                                      : ConjugateMode::Numeric);
  }
  return acc;
}

double surrogate_objective(const ProblemSpec& P, const SurrogateFamily& F, double rho,
                           const Eigen::MatrixXd& X) {
  if (rho <= 0.0) throw std::invalid_argument("surrogate_objective: rho must be positive");
  const Eigen::VectorXd sigma = spectral::singular_values(X);
  return P.f.value(X) + P.nu * surrogate_term(F, rho, sigma);
}

std::pair<double, double> mpec_evaluate(const ProblemSpec& P, const SurrogateFamily& F,
                                        const MpecPoint& pt) {
  const Eigen::VectorXd sw = spectral::singular_values(pt.W);
  if (sw.size() && sw(0) > 1.0 + 1e-10)
    throw std::invalid_argument("mpec_evaluate: ||W|| exceeds 1 (got " + std::to_string(sw(0)) +
                                ")");
  double obj = P.f.value(pt.X);
  for (Eigen::Index i = 0; i < sw.size(); ++i) obj += P.nu * F.phi(sw(i));
  const double residual =
      spectral::singular_values(pt.X).sum() - (pt.W.array() * pt.X.array()).sum();
  return {obj, residual};
}

MpecPoint lift_to_mpec(const Eigen::MatrixXd& X, const SurrogateFamily& F, double rank_eps) {
  MpecPoint pt;
  pt.X = X;
  // Symmetric PSD operands take the reduced form W = P diag(w) P^T with
  // 0 <= W <= I, keeping the multiplier in the symmetric space.
  if (X.rows() == X.cols() && rankcalm::symmetry_gap(X) <= 1e-10 * (1.0 + X.norm())) {
    const auto E = decompose(X, DecompMode::Eig);
    if (E.values.size() == 0 || E.values.minCoeff() >= -1e-10 * (1.0 + E.values.cwiseAbs().maxCoeff())) {
      const Eigen::Index n = E.values.size();
      const Eigen::VectorXd lam = E.values.cwiseMax(0.0);
      const Eigen::Index rk = spectral::numeric_rank(lam, rank_eps);
      Eigen::VectorXd w(n);
      for (Eigen::Index i = 0; i < n; ++i) w(i) = i < rk ? 1.0 : F.t_star;
      pt.W = E.left * w.asDiagonal() * E.left.transpose();
      return pt;
    }
  }
  const auto D = decompose(X, DecompMode::Svd);
  const Eigen::Index n = D.values.size();
  const Eigen::Index rk = spectral::numeric_rank(D.values, rank_eps);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = i < rk ? 1.0 : F.t_star;
  pt.W = D.left * w.asDiagonal() * D.right.leftCols(n).transpose();
  return pt;
}

std::optional<std::pair<double, Eigen::Index>> regularized_oracle(const ProblemSpec& P) {
  if (P.nu == 0.0) {
    // Reduces to the convex minimization of f over the set.
    penalty::PenaltyConfig c;
    c.rho = 0.0;
    c.max_iters = 2000;
    const auto tr = penalty::solve_multistart(P, c, Eigen::MatrixXd::Zero(P.set.rows, P.set.cols),
                                              4, 12345);
    return std::make_pair(tr.iterates.back().objective, tr.final_rank);
  }
  if (P.set.family == SetFamily::Correlation && P.set.rows == 2) {
    // One-parameter family [[1,c],[c,1]]: grid plus endpoint analysis.
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_rank = 2;
    const int grid = 10000;
    for (int k = 0; k <= grid; ++k) {
      const double c = -1.0 + 2.0 * static_cast<double>(k) / grid;
      Eigen::MatrixXd X(2, 2);
      X << 1.0, c, c, 1.0;
      const Eigen::Index rank = (std::abs(std::abs(c) - 1.0) < 1e-12) ? 1 : 2;
      const double v = P.f.value(X) + P.nu * static_cast<double>(rank);
      if (v < best) {
        best = v;
        best_rank = rank;
      }
    }
    return std::make_pair(best, best_rank);
  }
  return std::nullopt;
}

std::pair<double, Eigen::MatrixXd> minimize_surrogate(const ProblemSpec& P,
                                                      const SurrogateFamily& F, double rho,
                                                      int starts, std::uint64_t seed,
                                                      int max_iters) {
  if (!P.set.is_convex())
    throw std::invalid_argument("minimize_surrogate: needs a convex set");
  const double L = P.f.smoothness();
  const double step = L > 1e-8 ? 0.95 / L : 1.0;

  double best = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_X;
  Rng root(seed);
  for (int s = 0; s < std::max(starts, 1); ++s) {
    Rng rng = root.child(static_cast<std::uint64_t>(s));
    Eigen::MatrixXd X = s == 0 ? Eigen::MatrixXd::Zero(P.set.rows, P.set.cols)
                               : (P.set.symmetric_space
                                      ? Eigen::MatrixXd(rng.gaussian_symmetric(P.set.rows))
                                      : Eigen::MatrixXd(rng.gaussian_matrix(P.set.rows,
                                                                            P.set.cols)));
    X = sets::project_set(P.set, X);
    double Fv = surrogate_objective(P, F, rho, X);
    double st = step;
    for (int k = 0; k < max_iters; ++k) {
      // Linearize the concave part -nu * sum psi*(rho sigma_i) at X.
      const auto D = decompose(X, DecompMode::Svd);
      Eigen::VectorXd g(D.values.size());
      for (Eigen::Index i = 0; i < g.size(); ++i)
        g(i) = P.nu * rho * F.psi_star_subgradient(rho * D.values(i));
      const Eigen::MatrixXd W =
          D.left * g.asDiagonal() * D.right.leftCols(g.size()).transpose();
      const Eigen::MatrixXd G = X - st * (P.f.gradient(X) - W);
      Eigen::MatrixXd Xn = penalty::composite_prox(G, st * P.nu * rho, P.set, 1e-10);
      const double Fn = surrogate_objective(P, F, rho, Xn);
      if (Fn > Fv + 1e-10) {
        st *= 0.5;
        if (st < 1e-8) break;
        continue;
      }
      const double dec = Fv - Fn;
      X = Xn;
      Fv = Fn;
      if (dec <= 1e-11 * (1.0 + std::abs(Fv))) break;
    }
    if (Fv < best) {
      best = Fv;
      best_X = X;
    }
  }
  return {best, best_X};
}

EquivalenceReport equivalence_report(const ProblemSpec& P, const SurrogateFamily& F,
                                     const std::vector<double>& rho_schedule, int starts,
                                     std::uint64_t seed) {
  const auto oracle = regularized_oracle(P);
  if (!oracle)
    throw std::invalid_argument(
        "equivalence_report: no enumeration/multi-start oracle for this instance");
  EquivalenceReport rep;
  rep.oracle_value = oracle->first;
  rep.oracle_rank = oracle->second;
  rep.entries.resize(rho_schedule.size());
  // Schedule entries are independent; per-entry seeds keep the sweep
  // deterministic under any worker count.
  parallel_for(static_cast<Eigen::Index>(rho_schedule.size()), [&](Eigen::Index i) {
    const double rho = rho_schedule[i];
    const auto [val, X] = minimize_surrogate(P, F, rho, starts, splitmix64(seed ^ (i + 17)));
    EquivalenceEntry& e = rep.entries[i];
    e.rho = rho;
    e.surrogate_value = val;
    e.rank = spectral::numeric_rank(X);
    e.regularized_value = P.f.value(X) + P.nu * static_cast<double>(e.rank);
    e.matches = std::abs(val - rep.oracle_value) <= 1e-6 &&
                (P.nu == 0.0 || e.rank == rep.oracle_rank);
  });
  for (const auto& e : rep.entries)
    if (e.matches && !rep.matched_rho) rep.matched_rho = e.rho;
  return rep;
}

}  // namespace rankcalm::surrogate
