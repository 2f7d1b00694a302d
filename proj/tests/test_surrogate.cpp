#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rankcalm/matrix.hpp"
#include "rankcalm/rng.hpp"
#include "rankcalm/spectral.hpp"
#include "rankcalm/surrogate.hpp"

using namespace rankcalm;
using namespace rankcalm::surrogate;
using penalty::Objective;
using penalty::ProblemSpec;
using sets::ConstraintSet;

namespace {

Eigen::MatrixXd laplacian2() {
  Eigen::MatrixXd L(2, 2);
  L << 1, -1, -1, 1;
  return L;
}

ProblemSpec maxcut2(double nu) {
  ProblemSpec P;
  P.f = Objective::linear(laplacian2());
  P.set = ConstraintSet::correlation(2);
  P.r = 1;
  P.nu = nu;
  return P;
}

ProblemSpec zero_objective(Eigen::Index n, Eigen::Index m, double nu) {
  ProblemSpec P;
  P.f = Objective::linear(Eigen::MatrixXd::Zero(n, m));
  P.set = ConstraintSet::norm_ball(sets::NormKind::Frobenius, 1e9, n, m);
  P.r = 1;
  P.nu = nu;
  return P;
}

SurrogateFamily half_step_family() {
  // phi(t) = max(0, 2t - 1): convex, flat minimum, declared t* = 0.5.
  return SurrogateFamily::piecewise({{0.0, 0.0}, {0.5, 0.0}, {1.0, 1.0}}, 0.5);
}

double grid_conjugate(const SurrogateFamily& F, double s) {
  double best = -1e100;
  for (int k = 0; k <= 200000; ++k) {
    const double t = static_cast<double>(k) / 200000.0;
    best = std::max(best, s * t - F.phi(t));
  }
  return best;
}

}  // namespace

TEST_CASE("family validation") {
  CHECK_NOTHROW(SurrogateFamily::linear());
  CHECK_NOTHROW(SurrogateFamily::quad_shift());
  CHECK_NOTHROW(half_step_family());
  // phi(1) != 1 rejected.
  CHECK_THROWS_AS(SurrogateFamily::piecewise({{0.0, 0.0}, {1.0, 2.0}}, 0.0),
                  std::invalid_argument);
  // Nonconvex piecewise rejected.
  CHECK_THROWS_AS(SurrogateFamily::piecewise({{0.0, 0.0}, {0.5, 0.9}, {1.0, 1.0}}, 0.0),
                  std::invalid_argument);
  // phi(t*) != 0 rejected.
  CHECK_THROWS_AS(SurrogateFamily::piecewise({{0.0, 0.5}, {1.0, 1.0}}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("psi_star: closed forms") {
  const auto lin = SurrogateFamily::linear();
  CHECK(lin.psi_star(0.5) == doctest::Approx(0.0));
  CHECK(lin.psi_star(2.0) == doctest::Approx(1.0));
  CHECK(lin.psi_star(0.0) == doctest::Approx(0.0));

  const auto qs = SurrogateFamily::quad_shift();
  CHECK(qs.psi_star(0.0) == doctest::Approx(0.0));
  // Interior maximum at t = s - 1/2; cross-checked by a dense grid.
  CHECK(qs.psi_star(1.0) == doctest::Approx(0.125).epsilon(1e-10));
  CHECK(qs.psi_star(1.0) == doctest::Approx(grid_conjugate(qs, 1.0)).epsilon(1e-8));

  CHECK_THROWS_AS(lin.psi_star(-0.1), std::invalid_argument);
}

TEST_CASE("psi_star: numeric matches closed forms on a [0,10] grid") {
  for (const auto& F : {SurrogateFamily::linear(), SurrogateFamily::quad_shift()}) {
    for (int k = 0; k <= 1000; ++k) {
      const double s = 10.0 * k / 1000.0;
      CHECK(std::abs(F.psi_star(s, ConjugateMode::Numeric) -
                     F.psi_star(s, ConjugateMode::Closed)) < 1e-8);
    }
  }
  // Numeric-only family against an independent dense grid.
  const auto hs = half_step_family();
  for (double s : {0.0, 0.3, 1.0, 2.5, 7.0})
    CHECK(hs.psi_star(s) == doctest::Approx(grid_conjugate(hs, s)).epsilon(1e-8));
}

TEST_CASE("psi_star: monotone, convex, and Fenchel-bounded") {
  for (const auto& F :
       {SurrogateFamily::linear(), SurrogateFamily::quad_shift(), half_step_family()}) {
    double prev = F.psi_star(0.0);
    std::vector<double> vals;
    for (int k = 0; k <= 300; ++k) {
      const double s = 10.0 * k / 300.0;
      const double v = F.psi_star(s);
      CHECK(v >= prev - 1e-9);                 // nondecreasing
      CHECK(v >= s * F.t_star - 1e-9);         // psi*(s) >= s t* since phi(t*) = 0
      vals.push_back(v);
      prev = v;
    }
    for (size_t k = 1; k + 1 < vals.size(); ++k)  // midpoint convexity
      CHECK(vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-9);
  }
}

TEST_CASE("capped-l1 identity and the [0,1] cap") {
  const auto lin = SurrogateFamily::linear();
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const double sigma = 3.0 * rng.uniform();
    const double rho = 0.1 + 5.0 * rng.uniform();
    const double s = rho * sigma;
    CHECK(std::abs((s - lin.psi_star(s)) - std::min(s, 1.0)) < 1e-10);
    for (const auto& F : {SurrogateFamily::quad_shift(), half_step_family()}) {
      const double capped = s - F.psi_star(s);
      CHECK(capped >= -1e-10);
      CHECK(capped <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("surrogate_objective: capped-l1 example and limits") {
  const auto lin = SurrogateFamily::linear();
  ProblemSpec P = zero_objective(2, 2, 1.0);
  Eigen::MatrixXd X = Eigen::Vector2d(3.0, 0.2).asDiagonal();
  CHECK(surrogate_objective(P, lin, 2.0, X) == doctest::Approx(1.4).epsilon(1e-10));
  CHECK(surrogate_objective(P, lin, 2.0, Eigen::MatrixXd::Zero(2, 2)) ==
        doctest::Approx(0.0));

  // rho -> large: the term saturates at nu * rank.
  ProblemSpec P3 = zero_objective(3, 3, 0.7);
  Eigen::MatrixXd Y = Eigen::Vector3d(2.0, 0.5, 0.0).asDiagonal();
  for (double rho : {10.0, 100.0, 1000.0}) {
    const double term = surrogate_objective(P3, lin, rho, Y);
    if (rho * 0.5 >= 2.0) CHECK(term == doctest::Approx(0.7 * 2.0).epsilon(1e-9));
  }
}

TEST_CASE("mpec_evaluate and lift_to_mpec") {
  const auto lin = SurrogateFamily::linear();
  ProblemSpec P = zero_objective(2, 2, 1.0);

  MpecPoint z{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  const auto [obj0, res0] = mpec_evaluate(P, lin, z);
  CHECK(obj0 == doctest::Approx(0.0));
  CHECK(res0 == doctest::Approx(0.0));

  Eigen::MatrixXd X = Eigen::Vector2d(3.0, 0.0).asDiagonal();
  const MpecPoint lifted = lift_to_mpec(X, lin);
  CHECK((lifted.W - Eigen::MatrixXd(Eigen::Vector2d(1, 0).asDiagonal())).cwiseAbs().maxCoeff() <
        1e-12);
  const MpecPoint lifted_hs = lift_to_mpec(X, half_step_family());
  CHECK((lifted_hs.W - Eigen::MatrixXd(Eigen::Vector2d(1.0, 0.5).asDiagonal()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // Residual of any lifted pair vanishes; the phi-sum counts the rank.
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 2 + t % 3, m = n + t % 2;
    const Eigen::Index r = 1 + t % n;
    const Eigen::MatrixXd A = rng.gaussian_matrix(n, r) * rng.gaussian_matrix(r, m);
    for (const auto& F : {SurrogateFamily::linear(), half_step_family()}) {
      const MpecPoint pt = lift_to_mpec(A, F);
      ProblemSpec Q = zero_objective(n, m, 1.0);
      const auto [obj, res] = mpec_evaluate(Q, F, pt);
      CHECK(std::abs(res) <= 1e-10 * (1.0 + spectral::nuclear_norm(A)));
      CHECK(obj == doctest::Approx(static_cast<double>(spectral::numeric_rank(A))));
    }
  }

  // Symmetric PSD operands get the reduced multiplier 0 <= W <= I in S^n.
  {
    Eigen::MatrixXd Y = rng.gaussian_matrix(3, 1);
    const Eigen::MatrixXd Xp = Y * Y.transpose();
    const MpecPoint pt = lift_to_mpec(Xp, half_step_family());
    CHECK(symmetry_gap(pt.W) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pt.W);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
  }

  // W = t* (polar factor of X) on a rank-deficient X: residual (1-t*)||X||_*.
  const auto hs = half_step_family();
  const auto D = spectral::decompose(X, spectral::DecompMode::Svd);
  MpecPoint polar{X, 0.5 * D.left * D.right.leftCols(2).transpose()};
  const auto [objp, resp] = mpec_evaluate(P, hs, polar);
  (void)objp;
  CHECK(resp == doctest::Approx(0.5 * 3.0).epsilon(1e-10));

  // ||W|| > 1 rejected.
  MpecPoint bad{X, 2.0 * Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS(mpec_evaluate(P, lin, bad), std::invalid_argument);
}

TEST_CASE("equivalence_report: max-cut n=2 with nu = 0.1") {
  const std::vector<double> schedule = {0.5, 1, 2, 4, 8};
  double matched[2] = {0, 0};
  int idx = 0;
  for (const auto& F : {SurrogateFamily::linear(), SurrogateFamily::quad_shift()}) {
    const auto rep = equivalence_report(maxcut2(0.1), F, schedule, 4, 7);
    CHECK(rep.oracle_value == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(rep.oracle_rank == 1);
    REQUIRE(rep.matched_rho.has_value());
    bool found = false;
    for (const auto& e : rep.entries)
      if (e.matches) found = true;
    CHECK(found);
    matched[idx++] = rep.entries.back().surrogate_value;
  }
  // Family independence at large rho: both report the same optimum.
  CHECK(std::abs(matched[0] - matched[1]) < 1e-6);
}

TEST_CASE("equivalence_report: nu = 0 reduces to the convex solve") {
  const auto rep =
      equivalence_report(maxcut2(0.0), SurrogateFamily::linear(), {1.0, 2.0}, 4, 3);
  CHECK(rep.oracle_value == doctest::Approx(0.0).epsilon(1e-5));
  REQUIRE(rep.matched_rho.has_value());
}

TEST_CASE("equivalence_report: refuses instances without an oracle") {
  ProblemSpec P;
  P.f = Objective::linear(Eigen::MatrixXd::Zero(3, 3));
  P.set = ConstraintSet::correlation(3);
  P.r = 1;
  P.nu = 0.5;
  CHECK_THROWS_AS(equivalence_report(P, SurrogateFamily::linear(), {1.0}, 2, 0),
                  std::invalid_argument);
}
