#include "rankcalm/calmness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "rankcalm/matrix.hpp"
#include "rankcalm/simplex.hpp"
#include "rankcalm/spectral.hpp"

namespace rankcalm::calmness {

using rankcalm::sets::ConeKind;
using rankcalm::sets::ConstraintSet;
using rankcalm::sets::NormalConeModel;
using rankcalm::sets::SetFamily;
using rankcalm::spectral::DecompMode;
using rankcalm::spectral::decompose;

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::TrivialIntersection: return "trivial-intersection";
    case Outcome::WitnessFound: return "witness-found";
    case Outcome::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::string method_name(Method m) { return m == Method::Nullspace ? "nullspace" : "lp"; }

namespace {

// Linear parameterization of the candidate cone -N_Omega(Xbar): generators
// with free coefficients, generators with nonnegative coefficients, and the
// ball refinement (a ray generator whose vanishing forces the tied block).
struct ConeParam {
  std::vector<Eigen::MatrixXd> free_gens;
  std::vector<Eigen::MatrixXd> slack_gens;
  std::optional<int> ray_slack_index;  // into slack_gens
  bool tie_free_to_ray = false;        // free generators vanish with the ray
  bool has_psd_part = false;
};

void collect(const NormalConeModel& model, ConeParam& cp) {
  switch (model.kind) {
    case ConeKind::LinearSubspace: {
      if (model.ray_index) {
        for (int i = 0; i < static_cast<int>(model.basis.size()); ++i) {
          if (i == *model.ray_index) {
            cp.slack_gens.push_back(-model.basis[i]);  // -N flips the ray
            cp.ray_slack_index = static_cast<int>(cp.slack_gens.size()) - 1;
          } else {
            cp.free_gens.push_back(model.basis[i]);
          }
        }
        cp.tie_free_to_ray = model.slack_tied_to_ray;
      } else {
        for (const auto& Bk : model.basis) cp.free_gens.push_back(Bk);
      }
      for (const auto& A : model.cone_generators) cp.slack_gens.push_back(-A);
      break;
    }
    case ConeKind::NonnegOrthantAtPoint: {
      for (Eigen::Index i = 0; i < model.positive_mask.rows(); ++i)
        for (Eigen::Index j = 0; j < model.positive_mask.cols(); ++j)
          if (!model.positive_mask(i, j)) {
            Eigen::MatrixXd E = Eigen::MatrixXd::Zero(model.positive_mask.rows(),
                                                      model.positive_mask.cols());
            E(i, j) = 1.0;  // -N of the orthant: nonnegative on the zero set
            cp.slack_gens.push_back(std::move(E));
          }
      break;
    }
    case ConeKind::PsdConeAtPoint:
      cp.has_psd_part = true;
      break;
    case ConeKind::SumOfModels:
      for (const auto& p : model.parts) collect(p, cp);
      break;
    case ConeKind::RankSetAtPoint:
      // Rank sets as the Omega side: the normal space {U_beta S V_beta^T}.
      for (Eigen::Index i = 0; i < model.U_beta.cols(); ++i)
        for (Eigen::Index j = 0; j < model.V_beta.cols(); ++j)
          cp.free_gens.push_back(model.U_beta.col(i) * model.V_beta.col(j).transpose());
      break;
  }
}

// Rows of the linear conditions pinning H to the rank-side normal space.
struct RankSideConditions {
  // Each row is a matrix R with the condition <R, H> = 0.
  std::vector<Eigen::MatrixXd> rows;
  int model_dim = 0;
};

RankSideConditions rank_conditions_criterion1(const Eigen::MatrixXd& Xbar, Eigen::Index r) {
  const auto D = decompose(Xbar, DecompMode::Svd);
  const Eigen::Index n = Xbar.rows(), m = Xbar.cols();
  RankSideConditions rc;
  rc.model_dim = static_cast<int>((n - r) * (m - r));
  // U_1^T H = 0 and H V_1 = 0 characterize { U_beta S V_beta^T }.
  for (Eigen::Index k = 0; k < r; ++k)
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, m);
      R.col(j) = D.left.col(k);  // <R,H> = (U_1^T H)(k, j)
      rc.rows.push_back(std::move(R));
    }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < r; ++k) {
      Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, m);
      R.row(i) = D.right.col(k).transpose();  // <R,H> = (H V_1)(i, k)
      rc.rows.push_back(std::move(R));
    }
  return rc;
}

RankSideConditions rank_conditions_criterion2(const Eigen::MatrixXd& Xbar, Eigen::Index r) {
  const Eigen::Index n = Xbar.rows();
  RankSideConditions rc;
  rc.model_dim = static_cast<int>((n - r) * (n - r + 1) / 2);
  // H Xbar = 0 (with symmetric H this pins H to P_beta S P_beta^T).
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
      R.row(i) = Xbar.col(j).transpose();  // <R,H> = (H Xbar)(i, j)
      rc.rows.push_back(std::move(R));
    }
  return rc;
}

struct Assembled {
  Eigen::MatrixXd E;     // eqs x params
  Eigen::MatrixXd Hmap;  // (rows*cols) x params, column k = vec(gen_k)
  int n_free = 0, n_slack = 0;
  std::vector<Eigen::MatrixXd> gens;  // free first, then slack
};

Assembled assemble(const ConeParam& cp, const RankSideConditions& rc, Eigen::Index rows,
                   Eigen::Index cols) {
  Assembled a;
  a.n_free = static_cast<int>(cp.free_gens.size());
  a.n_slack = static_cast<int>(cp.slack_gens.size());
  a.gens = cp.free_gens;
  a.gens.insert(a.gens.end(), cp.slack_gens.begin(), cp.slack_gens.end());
  const int P = a.n_free + a.n_slack;
  a.Hmap.resize(rows * cols, P);
  for (int k = 0; k < P; ++k) a.Hmap.col(k) = Eigen::Map<const Eigen::VectorXd>(
      a.gens[k].data(), rows * cols);
  a.E.resize(static_cast<Eigen::Index>(rc.rows.size()), P);
  for (size_t e = 0; e < rc.rows.size(); ++e)
    for (int k = 0; k < P; ++k)
      a.E(static_cast<Eigen::Index>(e), k) = (rc.rows[e].array() * a.gens[k].array()).sum();
  return a;
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

}  // namespace

bool verify_witness(const ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& Xbar,
                    const Eigen::MatrixXd& H, int criterion, double tol) {
  if (H.norm() < 1e-6) return false;

  // Rank-side membership.
  if (criterion == 1) {
    const auto D = decompose(Xbar, DecompMode::Svd);
    const Eigen::MatrixXd U1 = D.left.leftCols(r), V1 = D.right.leftCols(r);
    if ((U1.transpose() * H).cwiseAbs().maxCoeff() > tol) return false;
    if ((H * V1).cwiseAbs().maxCoeff() > tol) return false;
  } else {
    if ((H * Xbar).cwiseAbs().maxCoeff() > tol) return false;
    if (symmetry_gap(H) > tol) return false;
  }

  // Omega-side membership of -H. PSD families: -H must be a PSD-cone normal
  // possibly plus pieces from the affine part; the constructions used here
  // only return PSD-cone directions, so check that case directly.
  if (criterion == 1 && S.psd_part) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()),
                                                      Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) return false;  // need H >= 0, i.e. -H <= 0
    if ((H * Xbar).cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }

  const NormalConeModel model =
      sets::normal_cone_model(criterion == 2 ? S.xi_part() : S, Xbar);
  ConeParam cp;
  collect(model, cp);
  const int n_free = static_cast<int>(cp.free_gens.size());
  const int n_slack = static_cast<int>(cp.slack_gens.size());
  if (n_free + n_slack == 0) return false;
  const Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(H.data(), H.size());

  // The collected generators parameterize -N(Xbar), the cone the candidate H
  // itself must lie in.
  if (n_slack == 0 || (cp.ray_slack_index && n_slack == 1)) {
    // Span fit; a ball ray coefficient must come out nonnegative.
    Eigen::MatrixXd G(H.size(), n_free + n_slack);
    Eigen::Index col = 0;
    for (const auto& M : cp.free_gens)
      G.col(col++) = Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
    for (const auto& M : cp.slack_gens)
      G.col(col++) = Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
    const Eigen::VectorXd coef = G.completeOrthogonalDecomposition().solve(h);
    if ((h - G * coef).norm() > tol * (1.0 + h.norm())) return false;
    if (cp.ray_slack_index && coef(n_free + *cp.ray_slack_index) < -1e-9) return false;
    return true;
  }

  // Polyhedral cones: sign-constrained reconstruction as an LP feasibility
  // problem (free coefficients split, slack coefficients >= 0).
  lp::Problem p;
  p.num_vars = 2 * n_free + n_slack;
  p.c = Eigen::VectorXd::Zero(p.num_vars);
  for (Eigen::Index e = 0; e < h.size(); ++e) {
    Eigen::VectorXd row(p.num_vars);
    for (int k = 0; k < n_free; ++k) {
      const double g = cp.free_gens[k](e % Xbar.rows(), e / Xbar.rows());
      row(2 * k) = g;
      row(2 * k + 1) = -g;
    }
    for (int s = 0; s < n_slack; ++s)
      row(2 * n_free + s) = cp.slack_gens[s](e % Xbar.rows(), e / Xbar.rows());
    p.rows.push_back({row, '=', h(e)});
  }
  const auto sol = lp::solve(p);
  return sol.status == lp::Status::Optimal;
}

namespace {

struct CheckContext {
  const ConstraintSet* S;
  Eigen::Index r;
  const Eigen::MatrixXd* Xbar;
  int criterion;
};

Certificate run_nullspace(const CheckContext& ctx, const ConeParam& cp,
                          const RankSideConditions& rc) {
  Certificate cert;
  cert.method = Method::Nullspace;
  cert.omega_model_dim = static_cast<int>(cp.free_gens.size() + cp.slack_gens.size());
  cert.rank_model_dim = rc.model_dim;
  const Eigen::Index rows = ctx.Xbar->rows(), cols = ctx.Xbar->cols();

  // The nullspace path explores the subspace part (free generators plus the
  // ball ray, whose sign resolves at verification time).
  ConeParam sub = cp;
  std::optional<int> ray_free_index;
  sub.slack_gens.clear();
  if (cp.ray_slack_index) {
    sub.free_gens.push_back(cp.slack_gens[*cp.ray_slack_index]);
    ray_free_index = static_cast<int>(sub.free_gens.size()) - 1;
  }
  const Assembled a = assemble(ConeParam{sub.free_gens, {}, {}, false, false}, rc, rows, cols);
  if (a.n_free == 0) {
    cert.outcome = Outcome::TrivialIntersection;
    cert.explanation = "normal-cone model at this point is {0}";
    return cert;
  }

  const Eigen::MatrixXd K = sets::nullspace(a.E);
  cert.intersection_dim = 0;
  if (K.cols() == 0) {
    cert.outcome = Outcome::TrivialIntersection;
    cert.explanation = "stacked-basis null space is trivial";
    return cert;
  }

  Eigen::MatrixXd Himg = a.Hmap * K;  // columns: H-images of kernel directions
  // Ball tie: kernel directions with vanishing ray coefficient cannot carry
  // the tied block either, so zero them out before judging the image.
  if (cp.tie_free_to_ray && ray_free_index) {
    bool ray_active = false;
    for (Eigen::Index c = 0; c < K.cols(); ++c)
      if (std::abs(K(*ray_free_index, c)) > 1e-9) ray_active = true;
    if (!ray_active) {
      cert.outcome = Outcome::TrivialIntersection;
      cert.explanation =
          "kernel directions have zero gradient-part coefficient; the tied slack block vanishes "
          "with it";
      return cert;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Himg, Eigen::ComputeThinU);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  cert.intersection_dim = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-9 * std::max(1.0, smax)) ++cert.intersection_dim;
  if (cert.intersection_dim == 0) {
    cert.outcome = Outcome::TrivialIntersection;
    cert.explanation = "kernel maps to H = 0 only";
    return cert;
  }

  Eigen::MatrixXd H = unvec(svd.matrixU().col(0), rows, cols);
  H /= H.norm();
  for (const Eigen::MatrixXd& cand : {H, Eigen::MatrixXd(-H)}) {
    if (verify_witness(*ctx.S, ctx.r, *ctx.Xbar, cand, ctx.criterion)) {
      cert.outcome = Outcome::WitnessFound;
      cert.witness = cand;
      cert.explanation = "nonzero kernel direction verified against both cones";
      return cert;
    }
  }
  cert.outcome = Outcome::Inconclusive;
  cert.explanation = "kernel direction found but membership verification failed";
  return cert;
}

lp::Problem base_lp(const Assembled& a) {
  // Variables: free generators split into +/- parts, then slacks; all in [0,1].
  const int nv = 2 * a.n_free + a.n_slack;
  lp::Problem p;
  p.num_vars = nv;
  p.c = Eigen::VectorXd::Zero(nv);
  const auto expand = [&](const Eigen::RowVectorXd& row_params) {
    Eigen::VectorXd row(nv);
    for (int k = 0; k < a.n_free; ++k) {
      row(2 * k) = row_params(k);
      row(2 * k + 1) = -row_params(k);
    }
    for (int s = 0; s < a.n_slack; ++s) row(2 * a.n_free + s) = row_params(a.n_free + s);
    return row;
  };
  for (Eigen::Index e = 0; e < a.E.rows(); ++e)
    p.rows.push_back({expand(a.E.row(e)), '=', 0.0});
  for (int v = 0; v < nv; ++v) {
    Eigen::VectorXd bound = Eigen::VectorXd::Zero(nv);
    bound(v) = 1.0;
    p.rows.push_back({bound, '<', 1.0});
  }
  return p;
}

Eigen::VectorXd params_from_lp(const Assembled& a, const Eigen::VectorXd& x) {
  Eigen::VectorXd theta(a.n_free + a.n_slack);
  for (int k = 0; k < a.n_free; ++k) theta(k) = x(2 * k) - x(2 * k + 1);
  for (int s = 0; s < a.n_slack; ++s) theta(a.n_free + s) = x(2 * a.n_free + s);
  return theta;
}

Certificate run_lp(const CheckContext& ctx, const ConeParam& cp, const RankSideConditions& rc) {
  Certificate cert;
  cert.method = Method::Lp;
  cert.omega_model_dim = static_cast<int>(cp.free_gens.size() + cp.slack_gens.size());
  cert.rank_model_dim = rc.model_dim;
  const Eigen::Index rows = ctx.Xbar->rows(), cols = ctx.Xbar->cols();
  const Assembled a = assemble(cp, rc, rows, cols);
  if (a.n_free + a.n_slack == 0) {
    cert.outcome = Outcome::TrivialIntersection;
    cert.explanation = "normal-cone model at this point is {0}";
    return cert;
  }

  const lp::Problem base = base_lp(a);
  const auto try_witness = [&](const Eigen::VectorXd& x, double opt) -> bool {
    const Eigen::VectorXd theta = params_from_lp(a, x);
    Eigen::MatrixXd H = unvec(a.Hmap * theta, rows, cols);
    if (H.norm() < 1e-6) return false;
    H /= H.norm();
    if (!verify_witness(*ctx.S, ctx.r, *ctx.Xbar, H, ctx.criterion)) return false;
    cert.outcome = Outcome::WitnessFound;
    cert.witness = H;
    cert.lp_optimum = opt;
    cert.explanation = "LP found a verified nonzero cone direction";
    return true;
  };

  // Aggregate fast path: maximize the total slack activation.
  if (a.n_slack > 0) {
    lp::Problem p = base;
    for (int s = 0; s < a.n_slack; ++s) p.c(2 * a.n_free + s) = 1.0;
    const auto sol = lp::solve(p);
    if (sol.status == lp::Status::Optimal && sol.objective > 1e-8 && try_witness(sol.x, sol.objective))
      return cert;
  }

  // Coordinate sweep over the H image: complete for polyhedral cones.
  double best = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index jstart = (ctx.criterion == 2) ? i : 0;  // symmetric space
    for (Eigen::Index j = jstart; j < cols; ++j) {
      Eigen::RowVectorXd functional = a.Hmap.row(i + rows * j);
      for (double sign : {1.0, -1.0}) {
        lp::Problem p = base;
        for (int k = 0; k < a.n_free; ++k) {
          p.c(2 * k) = sign * functional(k);
          p.c(2 * k + 1) = -sign * functional(k);
        }
        for (int s = 0; s < a.n_slack; ++s) p.c(2 * a.n_free + s) = sign * functional(a.n_free + s);
        const auto sol = lp::solve(p);
        if (sol.status != lp::Status::Optimal) continue;
        best = std::max(best, sol.objective);
        if (sol.objective > 1e-8 && try_witness(sol.x, sol.objective)) return cert;
      }
    }
  }
  cert.lp_optimum = best;
  cert.outcome = Outcome::TrivialIntersection;
  cert.explanation = "all coordinate LPs attain optimum 0";
  return cert;
}

Certificate psd_witness(const ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& Xbar) {
  Certificate cert;
  cert.method = Method::Nullspace;
  const auto D = decompose(Xbar, DecompMode::Eig);
  const auto beta = sets::zero_value_indices(D.values);
  const Eigen::Index take = std::min<Eigen::Index>(static_cast<Eigen::Index>(beta.size()),
                                                   Xbar.rows() - r);
  if (take < 1) {
    cert.outcome = Outcome::Inconclusive;
    cert.explanation = "no zero eigenvalue available for the PSD-cone witness";
    return cert;
  }
  Eigen::MatrixXd Pb(Xbar.rows(), take);
  for (Eigen::Index k = 0; k < take; ++k) Pb.col(k) = D.left.col(beta[k]);
  Eigen::MatrixXd H = Pb * Pb.transpose();
  H /= H.norm();
  cert.witness = H;
  cert.outcome = Outcome::WitnessFound;
  cert.rank_model_dim = static_cast<int>((Xbar.rows() - r) * (Xbar.rows() - r));
  cert.explanation =
      "PSD-cone normal directions at a rank-deficient point are also rank-set normals, so the "
      "intersection cannot be trivial";
  if (!verify_witness(S, r, Xbar, *cert.witness, 1)) {
    cert.outcome = Outcome::Inconclusive;
    cert.witness.reset();
    cert.explanation = "constructed PSD witness failed verification";
  }
  return cert;
}

}  // namespace

Certificate check_criterion1(const ConstraintSet& omega, Eigen::Index r,
                             const Eigen::MatrixXd& Xbar, std::optional<Method> force_method) {
  omega.check_dims(Xbar);
  if (r < 1 || r > Xbar.rows()) throw std::invalid_argument("check_criterion1: r out of range");
  const double feas = sets::residual(omega, Xbar);
  if (feas > 1e-8 * (1.0 + Xbar.norm()))
    throw std::invalid_argument("check_criterion1: point violates the set by " +
                                std::to_string(feas));
  if (sets::dist_to_rank(Xbar, r) > 1e-8 * (1.0 + Xbar.norm()))
    throw std::invalid_argument("check_criterion1: point violates the rank bound");

  const Eigen::Index rank = spectral::numeric_rank(Xbar);
  if (rank < r) {
    Certificate cert;
    cert.outcome = Outcome::Inconclusive;
    cert.explanation = "numeric rank " + std::to_string(rank) + " < r = " + std::to_string(r) +
                       ": the rank-set normal cone is not a subspace there and no constructive "
                       "test is available";
    return cert;
  }

  if (r == Xbar.rows() && Xbar.rows() == Xbar.cols()) {
    Certificate cert;
    cert.outcome = Outcome::TrivialIntersection;
    cert.explanation = "r equals the full dimension; the rank-set normal space is {0}";
    return cert;
  }

  // PSD-intersected Omega: the criterion fails by construction.
  if (omega.psd_part) return psd_witness(omega, r, Xbar);

  const NormalConeModel model = sets::normal_cone_model(omega, Xbar);
  ConeParam cp;
  collect(model, cp);
  const RankSideConditions rc = rank_conditions_criterion1(Xbar, r);
  CheckContext ctx{&omega, r, &Xbar, 1};

  Method method = force_method.value_or(cp.slack_gens.empty() || cp.ray_slack_index
                                            ? Method::Nullspace
                                            : Method::Lp);
  if (method == Method::Nullspace && !cp.slack_gens.empty() && !cp.ray_slack_index) {
    // Subspace-only exploration of a polyhedral cone cannot certify triviality.
    Certificate cert = run_nullspace(ctx, cp, rc);
    if (cert.outcome == Outcome::TrivialIntersection && force_method) {
      cert.outcome = Outcome::Inconclusive;
      cert.explanation += " (orthant directions were not explored by the nullspace path)";
    }
    return cert;
  }
  return method == Method::Nullspace ? run_nullspace(ctx, cp, rc) : run_lp(ctx, cp, rc);
}

Certificate check_criterion2(const ConstraintSet& xi, Eigen::Index r, const Eigen::MatrixXd& Xbar,
                             std::optional<Method> force_method) {
  xi.check_dims(Xbar);
  if (!xi.symmetric_space)
    throw std::invalid_argument("check_criterion2: needs a symmetric-space family");
  if (r < 1 || r > Xbar.rows()) throw std::invalid_argument("check_criterion2: r out of range");
  const ConstraintSet xio = xi.xi_part();
  const double feas = sets::residual(xio, Xbar);
  if (feas > 1e-8 * (1.0 + Xbar.norm()))
    throw std::invalid_argument("check_criterion2: point violates Xi by " + std::to_string(feas));
  if (sets::dist_to_psd_rank(Xbar, r) > 1e-8 * (1.0 + Xbar.norm()))
    throw std::invalid_argument("check_criterion2: point violates the PSD rank set");

  const Eigen::Index rank = spectral::numeric_rank(Xbar);
  if (rank < r) {
    Certificate cert;
    cert.outcome = Outcome::Inconclusive;
    cert.explanation = "numeric rank " + std::to_string(rank) + " < r = " + std::to_string(r) +
                       ": only the rank-r case admits the constructive normal-cone model";
    return cert;
  }
  if (r == Xbar.rows()) {
    Certificate cert;
    cert.outcome = Outcome::TrivialIntersection;
    cert.explanation = "r equals the dimension: the PSD rank set normal space reduces to the "
                       "PSD-cone normals at a full-rank point, which are {0}";
    return cert;
  }

  const NormalConeModel model = sets::normal_cone_model(xio, Xbar);
  ConeParam cp;
  collect(model, cp);
  const RankSideConditions rc = rank_conditions_criterion2(Xbar, r);
  CheckContext ctx{&xi, r, &Xbar, 2};

  Method method = force_method.value_or(cp.slack_gens.empty() || cp.ray_slack_index
                                            ? Method::Nullspace
                                            : Method::Lp);
  if (method == Method::Nullspace && !cp.slack_gens.empty() && !cp.ray_slack_index) {
    Certificate cert = run_nullspace(ctx, cp, rc);
    if (cert.outcome == Outcome::TrivialIntersection && force_method) {
      cert.outcome = Outcome::Inconclusive;
      cert.explanation += " (active inequality directions were not explored)";
    }
    return cert;
  }
  return method == Method::Nullspace ? run_nullspace(ctx, cp, rc) : run_lp(ctx, cp, rc);
}

// --- moduli ----------------------------------------------------------------------

namespace {

struct RatioRecord {
  double residual;
  double ratio;
  Eigen::MatrixXd sample;
  bool used = false;
};

void fill_deciles(std::vector<RatioRecord>& recs, ModulusReport& rep) {
  std::vector<const RatioRecord*> used;
  for (const auto& r : recs)
    if (r.used) {
      used.push_back(&r);
      rep.sample_residuals.push_back(r.residual);
      rep.sample_ratios.push_back(r.ratio);
    }
  std::sort(used.begin(), used.end(),
            [](const RatioRecord* a, const RatioRecord* b) { return a->residual < b->residual; });
  const int n = static_cast<int>(used.size());
  rep.samples_used = n;
  if (n == 0) return;
  const int base = n / 10, extra = n % 10;
  int at = 0;
  for (int d = 0; d < 10; ++d) {
    // Counts nondecreasing across deciles: remainders go to the tail buckets.
    const int cnt = base + (d >= 10 - extra ? 1 : 0);
    rep.decile_counts[d] = cnt;
    double mx = 0.0;
    for (int k = 0; k < cnt; ++k, ++at) mx = std::max(mx, used[at]->ratio);
    rep.ratio_deciles[d] = mx;
  }
  for (const auto* r : used) {
    if (r->ratio > rep.worst_ratio) {
      rep.worst_ratio = r->ratio;
      rep.worst_sample = r->sample;
    }
  }
  rep.kappa_hat = rep.worst_ratio;
}

}  // namespace

ModulusReport estimate_global_modulus(const ConstraintSet& omega, Eigen::Index r,
                                      const SampleSpec& spec) {
  ModulusReport rep;
  rep.seed = spec.seed;
  const bool compact = omega.is_compact();
  rep.noncompact_warning = !compact;
  const double region =
      spec.region_radius > 0 ? spec.region_radius : 10.0 * std::sqrt(static_cast<double>(omega.rows));

  sets::GammaOptions gopts;
  gopts.method = omega.discrete_gamma(r) ? sets::GammaMethod::Enumerate
                                         : sets::GammaMethod::Alternating;
  gopts.restarts = spec.gamma_restarts;

  std::vector<RatioRecord> recs(spec.samples);
  std::mutex skip_mutex;
  int skipped = 0;
  Rng root(spec.seed);
  parallel_for(spec.samples, [&](Eigen::Index i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    Eigen::MatrixXd G = omega.symmetric_space ? rng.gaussian_symmetric(omega.rows)
                                              : rng.gaussian_matrix(omega.rows, omega.cols);
    G *= spec.scale;
    Eigen::MatrixXd X = sets::project_set(omega, G);
    if (!compact && X.norm() > region) {
      std::lock_guard<std::mutex> lock(skip_mutex);
      ++skipped;
      return;
    }
    const double theta = spectral::rank_residual(X, r);
    if (theta <= 1e-10) {
      std::lock_guard<std::mutex> lock(skip_mutex);
      ++skipped;
      return;
    }
    sets::GammaOptions g = gopts;
    g.seed = splitmix64(spec.seed ^ (0xabcdefULL + i));
    const double d = sets::dist_to_gamma(omega, r, X, g);
    recs[i] = {theta, d / theta, std::move(X), true};
  });
  rep.samples_skipped = skipped;
  fill_deciles(recs, rep);
  return rep;
}

ModulusReport estimate_local_ebound(const ConstraintSet& omega, Eigen::Index r,
                                    const Eigen::MatrixXd& Xbar, double delta, int samples,
                                    std::uint64_t seed) {
  omega.check_dims(Xbar);
  ModulusReport rep;
  rep.seed = seed;
  rep.delta = delta;
  const bool psd = omega.psd_part;
  const ConstraintSet xio = omega.xi_part();

  sets::GammaOptions gopts;
  gopts.method = omega.discrete_gamma(r) ? sets::GammaMethod::Enumerate
                                         : sets::GammaMethod::Alternating;

  std::vector<RatioRecord> recs(samples);
  std::mutex skip_mutex;
  int skipped = 0;
  Rng root(seed);
  parallel_for(samples, [&](Eigen::Index i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    Eigen::MatrixXd G = omega.symmetric_space ? rng.gaussian_symmetric(omega.rows)
                                              : rng.gaussian_matrix(omega.rows, omega.cols);
    G /= std::max(G.norm(), 1e-12);
    const Eigen::MatrixXd X = Xbar + (delta * rng.uniform()) * G;
    const double den_raw = psd ? sets::dist_to_set(xio, X) + sets::dist_to_psd_rank(X, r)
                               : sets::dist_to_set(omega, X) + sets::dist_to_rank(X, r);
    sets::GammaOptions g = gopts;
    g.seed = splitmix64(seed ^ (0x515151ULL + i));
    const double num = sets::dist_to_gamma(omega, r, X, g);
    if (num <= 1e-12 && den_raw <= 1e-10) {  // point already in Gamma_r
      std::lock_guard<std::mutex> lock(skip_mutex);
      ++skipped;
      return;
    }
    recs[i] = {den_raw, num / std::max(den_raw, 1e-12), X, true};
  });
  rep.samples_skipped = skipped;
  fill_deciles(recs, rep);
  return rep;
}

// --- PAM ------------------------------------------------------------------------

namespace {

// Rank projection with an explicit selection rule at spectral ties. When the
// cut falls inside a tied block the nearest rank-r point is non-unique and any
// choice is a valid projection; a seeded rotation of the tied eigenvector
// block picks one deterministically, which also keeps the iteration from
// parking on symmetric degenerate pairs (e.g. the identity start).
Eigen::MatrixXd tie_broken_rank_proj(const Eigen::MatrixXd& Z, Eigen::Index r, bool psd,
                                     std::uint64_t tie_seed) {
  const auto D = decompose(Z, psd ? DecompMode::Eig : DecompMode::Svd);
  const Eigen::Index n = D.values.size();
  Eigen::MatrixXd U = D.left;
  Eigen::MatrixXd V = psd ? D.left : D.right;
  const double scale = 1.0 + D.values.cwiseAbs().maxCoeff();
  const bool tied = r < n && std::abs(D.values(r - 1) - D.values(r)) <= 1e-10 * scale &&
                    D.values(r - 1) > 1e-10 * scale;
  if (tied) {
    Eigen::Index a = r - 1, b = r;
    while (a > 0 && std::abs(D.values(a - 1) - D.values(r - 1)) <= 1e-10 * scale) --a;
    while (b + 1 < n && std::abs(D.values(b + 1) - D.values(r - 1)) <= 1e-10 * scale) ++b;
    const Eigen::Index g = b - a + 1;
    Rng rng(tie_seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.gaussian_matrix(g, g));
    const Eigen::MatrixXd Q = Eigen::MatrixXd(qr.householderQ());
    U.middleCols(a, g) = U.middleCols(a, g) * Q;
    if (psd)
      V = U;
    else
      V.middleCols(a, g) = V.middleCols(a, g) * Q;
  }
  Eigen::VectorXd kept = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < r; ++i)
    kept(i) = psd ? std::max(D.values(i), 0.0) : D.values(i);
  return U.leftCols(n) * kept.asDiagonal() * V.leftCols(n).transpose();
}

}  // namespace

PamTrace pam_feasibility(const ConstraintSet& S, Eigen::Index r, const Eigen::MatrixXd& X0,
                         const PamOptions& opts) {
  S.check_dims(X0);
  if (opts.c < 0.0) throw std::invalid_argument("pam_feasibility: c must be >= 0");
  const bool psd = S.psd_part;
  const ConstraintSet xio = S.xi_part();
  const auto set_proj = [&](const Eigen::MatrixXd& Z) {
    return psd ? sets::project_set(xio, Z, opts.project_tol)
               : sets::project_set(S, Z, opts.project_tol);
  };
  int tie_counter = 0;
  const auto rank_proj = [&](const Eigen::MatrixXd& Z) {
    return tie_broken_rank_proj(Z, r, psd, 0xbead5eedULL + 131 * tie_counter++);
  };

  PamTrace tr;
  Eigen::MatrixXd X = set_proj(X0);
  Eigen::MatrixXd Y = rank_proj(X);
  tr.dist.push_back((X - Y).norm());
  const double c = opts.c;
  int stall = 0;
  for (int k = 0; k < opts.max_iters; ++k) {
    X = set_proj((Y + c * X) / (1.0 + c));
    Y = rank_proj((X + c * Y) / (1.0 + c));
    const double d = (X - Y).norm();
    if (d > tr.dist.back() + 1e-12) {
      if (++stall >= 50) {
        tr.diagnostic = "distance sequence stalled (nonmonotone for 50 iterations)";
        tr.dist.push_back(d);
        break;
      }
    } else {
      stall = 0;
    }
    tr.dist.push_back(d);
    if (d <= opts.tol) {
      tr.converged = true;
      break;
    }
  }
  tr.iterations = static_cast<int>(tr.dist.size()) - 1;
  tr.X = X;
  tr.Y = Y;

  // Geometric-rate fit over the last <= 20 positive distances.
  std::vector<double> logs;
  for (auto it = tr.dist.rbegin(); it != tr.dist.rend() && logs.size() < 20; ++it)
    if (*it > 1e-300) logs.push_back(std::log(*it));
  std::reverse(logs.begin(), logs.end());
  if (logs.size() >= 2) {
    const double n = static_cast<double>(logs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < logs.size(); ++k) {
      sx += k;
      sy += logs[k];
      sxx += static_cast<double>(k) * k;
      sxy += k * logs[k];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    tr.fitted_rate = std::exp(slope);
  }
  return tr;
}

}  // namespace rankcalm::calmness
