#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rankcalm/rng.hpp"
#include "rankcalm/sets.hpp"
#include "rankcalm/spectral.hpp"

using namespace rankcalm;
using namespace rankcalm::sets;

namespace {

Eigen::MatrixXd diag2(double a, double b) {
  Eigen::Vector2d v(a, b);
  return v.asDiagonal();
}

Eigen::MatrixXd diag3(double a, double b, double c) {
  Eigen::Vector3d v(a, b, c);
  return v.asDiagonal();
}

// Random point of the family, built by projecting a gaussian.
Eigen::MatrixXd random_member(const ConstraintSet& S, Rng& rng) {
  const Eigen::MatrixXd G = S.symmetric_space ? rng.gaussian_symmetric(S.rows)
                                              : rng.gaussian_matrix(S.rows, S.cols);
  return project_set(S, G);
}

}  // namespace

TEST_CASE("residual: membership examples") {
  CHECK(residual(ConstraintSet::correlation(2), Eigen::MatrixXd::Identity(2, 2)) < 1e-12);
  Eigen::MatrixXd RS(2, 2);
  RS << 0.5, 0.5, 0.2, 0.8;
  CHECK(residual(ConstraintSet::row_stochastic(2), RS) < 1e-12);
  CHECK(residual(ConstraintSet::psd_cone(2), diag2(1, -2)) == doctest::Approx(2.0));
  CHECK_THROWS_AS(residual(ConstraintSet::correlation(3), Eigen::MatrixXd::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("project_rank: examples and idempotence") {
  CHECK((project_rank(diag3(3, 2, 1), 1) - diag3(3, 0, 0)).cwiseAbs().maxCoeff() < 1e-12);
  Rng rng(17);
  const Eigen::MatrixXd A = rng.gaussian_matrix(3, 2) * rng.gaussian_matrix(2, 4);
  CHECK((project_rank(A, 2) - A).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("project_rank: nuclear-distance optimality against random candidates") {
  // Independent oracle: no random rank-r candidate may beat the truncation in
  // nuclear distance (unit-test scale; the acceptance suite runs the full one).
  Rng rng(19);
  for (int inst = 0; inst < 5; ++inst) {
    const Eigen::MatrixXd G = rng.gaussian_matrix(3, 3);
    for (Eigen::Index r = 1; r <= 2; ++r) {
      const Eigen::MatrixXd T = project_rank(G, r);
      const double best = spectral::singular_values(G - T).sum();
      for (int c = 0; c < 2000; ++c) {
        const Eigen::MatrixXd Z = rng.gaussian_matrix(3, r) * rng.gaussian_matrix(r, 3);
        CHECK(spectral::singular_values(G - Z).sum() >= best - 1e-9);
      }
    }
  }
}

TEST_CASE("project_psd_rank: examples and Frobenius optimality") {
  CHECK((project_psd_rank(diag2(3, -1), 1) - diag2(3, 0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(project_psd_rank(diag2(-1, -2), 1).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(23);
  for (int inst = 0; inst < 5; ++inst) {
    const Eigen::MatrixXd G = rng.gaussian_symmetric(3);
    const Eigen::MatrixXd T = project_psd_rank(G, 1);
    const double best = (G - T).norm();
    for (int c = 0; c < 2000; ++c) {
      Eigen::MatrixXd v = rng.gaussian_matrix(3, 1);
      const Eigen::MatrixXd Z = std::abs(rng.gaussian()) * v * v.transpose();
      CHECK((G - Z).norm() >= best - 1e-9);
    }
  }
}

TEST_CASE("project_set: closed forms and Dykstra families") {
  // Idempotence on a correlation member.
  const ConstraintSet corr = ConstraintSet::correlation(3);
  Rng rng(29);
  const Eigen::MatrixXd C0 = random_member(corr, rng);
  CHECK(residual(corr, C0) < 1e-7);
  CHECK((project_set(corr, C0) - C0).norm() < 1e-6);

  // Affine diagonal part alone: diag(3,-1) -> I.
  std::vector<LinearEquality> eqs;
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
    M(i, i) = 1;
    eqs.push_back({M, 1.0});
  }
  CHECK((project_affine(eqs, diag2(3, -1)) - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // Doubly stochastic projection of [[2,0],[0,0]] is the identity; oracle is
  // an exhaustive scan of the one-parameter family [[a,1-a],[1-a,a]].
  Eigen::MatrixXd X(2, 2);
  X << 2, 0, 0, 0;
  const Eigen::MatrixXd P = project_set(ConstraintSet::doubly_stochastic(2), X);
  double best_a = -1, best_val = 1e100;
  for (int k = 0; k <= 100000; ++k) {
    const double a = static_cast<double>(k) / 100000.0;
    Eigen::MatrixXd D(2, 2);
    D << a, 1 - a, 1 - a, a;
    const double v = (X - D).squaredNorm();
    if (v < best_val) {
      best_val = v;
      best_a = a;
    }
  }
  CHECK(best_a == doctest::Approx(1.0));  // oracle confirms the identity
  CHECK((P - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("project_set: norm balls") {
  Rng rng(31);
  const Eigen::MatrixXd G = 3.0 * rng.gaussian_matrix(3, 4);
  for (NormKind k : {NormKind::Spectral, NormKind::Frobenius, NormKind::Nuclear}) {
    const ConstraintSet ball = ConstraintSet::norm_ball(k, 1.0, 3, 4);
    const Eigen::MatrixXd P = project_set(ball, G);
    CHECK(residual(ball, P) < 1e-9);
    // Projection optimality vs random members.
    for (int c = 0; c < 1000; ++c) {
      const Eigen::MatrixXd Z = random_member(ball, rng);
      CHECK((G - Z).norm() >= (G - P).norm() - 1e-8);
    }
  }
}

TEST_CASE("projection optimality across families (random-candidate oracle)") {
  Rng rng(37);
  std::vector<ConstraintSet> families = {
      ConstraintSet::correlation(3),
      ConstraintSet::row_stochastic(3),
      ConstraintSet::doubly_stochastic(3),
      ConstraintSet::quad_diag(3),
      ConstraintSet::block_trace(2, 2),
      ConstraintSet::psd_cone(3),
  };
  for (const auto& S : families) {
    const Eigen::MatrixXd G = S.symmetric_space ? rng.gaussian_symmetric(S.rows)
                                                : rng.gaussian_matrix(S.rows, S.cols);
    const Eigen::MatrixXd P = project_set(S, G);
    CHECK(residual(S, P) < 1e-7);
    const double d = (G - P).norm();
    for (int c = 0; c < 1000; ++c) {
      const Eigen::MatrixXd Z = random_member(S, rng);
      CHECK((G - Z).norm() >= d - 1e-7);
    }
  }
}

TEST_CASE("dykstra residual stays within 10x tolerance for both pieces") {
  Rng rng(41);
  const ConstraintSet corr = ConstraintSet::correlation(4);
  const auto ops = prox_components(corr);
  DykstraOptions opts;
  opts.tol = 1e-9;
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd G = rng.gaussian_symmetric(4);
    const Eigen::MatrixXd P = dykstra(G, ops, opts);
    CHECK((P.diagonal() - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(dist_to_psd(P) < 1e-8);
  }
}

TEST_CASE("distance identities") {
  Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + t % 4;
    // PSD Y: dist to the PSD rank set equals dist to the plain rank set.
    Eigen::MatrixXd A = rng.gaussian_matrix(n, n);
    const Eigen::MatrixXd Y = A * A.transpose();
    for (Eigen::Index r = 1; r <= n; ++r)
      CHECK(std::abs(dist_to_psd_rank(Y, r) - dist_to_rank(Y, r)) < 1e-9 * (1 + Y.norm()));

    // Chained bound on arbitrary symmetric Z.
    const Eigen::MatrixXd Z = rng.gaussian_symmetric(n);
    for (Eigen::Index r = 1; r <= n; ++r)
      CHECK(dist_to_psd_rank(Z, r) <=
            2.0 * dist_to_psd(Z) + dist_to_rank(Z, r) + 1e-9 * (1 + Z.norm()));
  }
}

TEST_CASE("dist_to_gamma: enumeration on the correlation family") {
  const ConstraintSet corr2 = ConstraintSet::correlation(2);
  GammaOptions opts;
  opts.method = GammaMethod::Enumerate;
  // Nearest of the two rank-one correlation matrices to the identity.
  CHECK(dist_to_gamma(corr2, 1, Eigen::MatrixXd::Identity(2, 2), opts) ==
        doctest::Approx(std::sqrt(2.0)));

  // A member of Gamma_r has distance zero.
  Eigen::MatrixXd E(2, 2);
  E << 1, 1, 1, 1;
  CHECK(dist_to_gamma(corr2, 1, E, opts) < 1e-12);

  // n = 3: enumeration oracle over the 4 sign patterns; every pattern differs
  // from I in the six off-diagonal entries by +-1, so the distance is sqrt(6).
  const ConstraintSet corr3 = ConstraintSet::correlation(3);
  const auto pts = enumerate_gamma(corr3, 1);
  CHECK(pts.size() == 4);
  double manual = 1e100;
  for (const auto& P : pts) manual = std::min(manual, (Eigen::MatrixXd::Identity(3, 3) - P).norm());
  CHECK(manual == doctest::Approx(std::sqrt(6.0)));
  CHECK(dist_to_gamma(corr3, 1, Eigen::MatrixXd::Identity(3, 3), opts) ==
        doctest::Approx(manual));

  CHECK_THROWS_AS(dist_to_gamma(corr3, 2, Eigen::MatrixXd::Identity(3, 3), opts),
                  std::invalid_argument);
}

TEST_CASE("dist_to_gamma: alternating agrees with enumeration on discrete instances") {
  Rng rng(47);
  for (Eigen::Index n = 2; n <= 4; ++n) {
    const ConstraintSet corr = ConstraintSet::correlation(n);
    GammaOptions en;
    en.method = GammaMethod::Enumerate;
    GammaOptions alt;
    alt.method = GammaMethod::Alternating;
    alt.restarts = 32;
    for (int t = 0; t < 5; ++t) {
      const Eigen::MatrixXd X = random_member(corr, rng);
      alt.seed = 1000 + 7 * t + n;
      const double de = dist_to_gamma(corr, 1, X, en);
      const double da = dist_to_gamma(corr, 1, X, alt);
      CHECK(std::abs(de - da) < 1e-6);
    }
  }
}

TEST_CASE("normal_cone_model: constructive shapes") {
  // Correlation's affine part at any member: the diagonal subspace, dim n.
  const ConstraintSet corr = ConstraintSet::correlation(3);
  Rng rng(53);
  const Eigen::MatrixXd X = random_member(corr, rng);
  const auto xi_model = normal_cone_model(corr.xi_part(), X);
  REQUIRE(xi_model.kind == ConeKind::LinearSubspace);
  CHECK(xi_model.basis.size() == 3);

  // Rank set at diag(3,0,0): dimension (n-r)(m-r) = 4, beta = {2,3}.
  const auto rk = normal_cone_model(ConstraintSet::rank_set(1, 3, 3), diag3(3, 0, 0));
  REQUIRE(rk.kind == ConeKind::RankSetAtPoint);
  CHECK(rk.subspace_dim() == 4);
  CHECK(rk.beta.size() == 2);

  // PSD cone at diag(1,0): factors plus beta = {2}.
  const auto psd = normal_cone_model(ConstraintSet::psd_cone(2), diag2(1, 0));
  REQUIRE(psd.kind == ConeKind::PsdConeAtPoint);
  CHECK(psd.beta.size() == 1);
  CHECK(psd.beta[0] == 1);

  // Rank-deficient point refused by the rank-set model.
  CHECK_THROWS_AS(normal_cone_model(ConstraintSet::rank_set(2, 3, 3), diag3(3, 0, 0)),
                  std::invalid_argument);
  // Point outside the set refused.
  CHECK_THROWS_AS(normal_cone_model(corr, diag3(2, 1, 1)), std::invalid_argument);
}

TEST_CASE("normal_cone_model: psd rank set at an exact-rank point") {
  Rng rng(59);
  Eigen::MatrixXd A = rng.gaussian_matrix(4, 2);
  const Eigen::MatrixXd X = A * A.transpose();  // PSD rank 2
  const auto model = normal_cone_model(ConstraintSet::psd_rank_set(2, 4), X);
  REQUIRE(model.kind == ConeKind::RankSetAtPoint);
  CHECK(model.beta.size() == 2);
  CHECK(model.U_beta.cols() == 2);
  // The factor columns annihilate X.
  CHECK((X * model.U_beta).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(normal_cone_model(ConstraintSet::psd_rank_set(3, 4), X),
                  std::invalid_argument);
}

TEST_CASE("set serialization guards") {
  CHECK_THROWS_AS(ConstraintSet::norm_ball(NormKind::Frobenius, -1.0, 2, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConstraintSet::block_trace(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(ConstraintSet::rank_set(0, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(ConstraintSet::two_trace(Eigen::MatrixXd::Identity(2, 2),
                                           Eigen::MatrixXd::Identity(2, 2), 1.0, 0.0),
                  std::invalid_argument);
}
