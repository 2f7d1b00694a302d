#include "rankcalm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "rankcalm/calmness.hpp"
#include "rankcalm/io.hpp"
#include "rankcalm/report.hpp"
#include "rankcalm/rng.hpp"
#include "rankcalm/spectral.hpp"
#include "rankcalm/surrogate.hpp"

namespace rankcalm::cli {

using calmness::Certificate;
using calmness::ModulusReport;
using calmness::Outcome;
using penalty::PenaltyConfig;
using penalty::PenaltyKind;
using penalty::ProblemSpec;
using report::Json;
using sets::ConstraintSet;
using sets::SetFamily;

Command parse_command(const std::string& name) {
  if (name == "certify") return Command::Certify;
  if (name == "ebound") return Command::Ebound;
  if (name == "modulus") return Command::Modulus;
  if (name == "solve") return Command::Solve;
  if (name == "continuation") return Command::Continuation;
  if (name == "surrogate") return Command::Surrogate;
  if (name == "pam") return Command::Pam;
  if (name == "sandwich-suite") return Command::SandwichSuite;
  throw std::invalid_argument("unknown command '" + name + "'");
}

Eigen::MatrixXd ingest_graph(const std::string& path) { return io::graph_laplacian_file(path); }

namespace {

// Accepts commas or whitespace as separators.
std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::string norm = s;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream is(norm);
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

Eigen::MatrixXd load_matrix_any(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".mtx")
    return io::dense_from_coordinate(io::read_matrix_market_file(path));
  return io::read_matrix_text_file(path).values;
}

sets::NormKind parse_norm(const std::string& s) {
  if (s == "spectral") return sets::NormKind::Spectral;
  if (s == "frobenius") return sets::NormKind::Frobenius;
  if (s == "nuclear") return sets::NormKind::Nuclear;
  throw std::invalid_argument("unknown norm tag '" + s + "'");
}

ConstraintSet set_from_fields(const std::string& family, Eigen::Index n, Eigen::Index m,
                              Eigen::Index r, double radius, const std::string& norm,
                              Eigen::Index k, Eigen::Index p, bool sym, bool psd,
                              const io::ConfigFile* file, const std::string& base_dir) {
  if (family == "correlation") return ConstraintSet::correlation(n);
  if (family == "psdcone") return ConstraintSet::psd_cone(n);
  if (family == "rowstochastic") return ConstraintSet::row_stochastic(n);
  if (family == "doublystochastic") return ConstraintSet::doubly_stochastic(n);
  if (family == "quaddiag") return ConstraintSet::quad_diag(n);
  if (family == "blocktrace") return ConstraintSet::block_trace(k, p);
  if (family == "rankset") return ConstraintSet::rank_set(r, n, m > 0 ? m : n);
  if (family == "psdrankset") return ConstraintSet::psd_rank_set(r, n);
  if (family == "normball")
    return ConstraintSet::norm_ball(parse_norm(norm), radius, n, m > 0 ? m : n, sym, psd);
  if (family == "frobeniussphere")
    return ConstraintSet::frobenius_sphere(radius, n, m > 0 ? m : n, sym);
  if (family == "twotrace") {
    if (!file) throw std::invalid_argument("twotrace needs a set file with B and C paths");
    const Eigen::MatrixXd B = load_matrix_any(io::join_path(base_dir, file->get("", "B")));
    const Eigen::MatrixXd C = load_matrix_any(io::join_path(base_dir, file->get("", "C")));
    return ConstraintSet::two_trace(B, C, std::stod(file->get("", "b1")),
                                    std::stod(file->get("", "b2")));
  }
  if (family == "binaryqp") {
    if (!file) throw std::invalid_argument("binaryqp needs a set file with A_i paths");
    std::vector<Eigen::MatrixXd> A;
    for (int i = 1;; ++i) {
      const std::string key = "A" + std::to_string(i);
      if (!file->has("", key)) break;
      A.push_back(load_matrix_any(io::join_path(base_dir, file->get("", key))));
    }
    const auto bs = parse_number_list(file->get("", "b"));
    Eigen::VectorXd b(bs.size());
    for (size_t i = 0; i < bs.size(); ++i) b(static_cast<Eigen::Index>(i)) = bs[i];
    return ConstraintSet::binary_qp(std::move(A), std::move(b), n);
  }
  throw std::invalid_argument("unknown set family '" + family + "'");
}

}  // namespace

ConstraintSet load_set_file(const std::string& path) {
  const io::ConfigFile cf = io::parse_config_file(path);
  const std::string dir = io::dir_name(path);
  const std::string family = cf.get("", "family");
  const auto geti = [&](const char* key, Eigen::Index dflt) {
    return cf.has("", key) ? static_cast<Eigen::Index>(std::stol(cf.get("", key))) : dflt;
  };
  const Eigen::Index n = geti("n", 0), m = geti("m", 0), r = geti("r", 1);
  const Eigen::Index k = geti("k", 0), p = geti("p", 0);
  const double radius = cf.has("", "rho") ? std::stod(cf.get("", "rho")) : 1.0;
  const std::string norm = cf.get_or("", "norm", "frobenius");
  const bool sym = cf.get_or("", "sym", "0") == "1";
  const bool psd = cf.get_or("", "psd", "0") == "1";
  return set_from_fields(family, n, m, r, radius, norm, k, p, sym, psd, &cf, dir);
}

ConstraintSet load_set(const RunConfig& cfg) {
  if (!cfg.set_file.empty()) return load_set_file(cfg.set_file);
  if (cfg.set_tag.empty()) throw std::invalid_argument("no set given (use --set or --set-file)");
  return set_from_fields(cfg.set_tag, cfg.n, cfg.m, cfg.r, cfg.radius, cfg.norm, cfg.k,
                         cfg.p_block, cfg.sym, cfg.psd, nullptr, "");
}

LoadedProblem load_problem(const std::string& path) {
  const io::ConfigFile cf = io::parse_config_file(path);
  const std::string dir = io::dir_name(path);
  LoadedProblem lp;
  lp.echo = cf.echo;

  // Objective.
  const std::string obj = cf.get("problem", "objective");
  if (obj == "linear") {
    Eigen::MatrixXd C;
    if (cf.has("problem", "graph"))
      C = ingest_graph(io::join_path(dir, cf.get("problem", "graph")));
    else
      C = load_matrix_any(io::join_path(dir, cf.get("problem", "C")));
    lp.spec.f = penalty::Objective::linear(std::move(C));
  } else if (obj == "least-squares") {
    std::vector<Eigen::MatrixXd> ops;
    std::istringstream files(cf.get("problem", "ops"));
    std::string f;
    while (files >> f) ops.push_back(load_matrix_any(io::join_path(dir, f)));
    const auto bs = parse_number_list(cf.get("problem", "rhs"));
    Eigen::VectorXd rhs(bs.size());
    for (size_t i = 0; i < bs.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = bs[i];
    lp.spec.f = penalty::Objective::least_squares(std::move(ops), std::move(rhs));
  } else {
    throw std::invalid_argument(path + ": unknown objective '" + obj + "'");
  }
  if (cf.has("problem", "mu"))
    lp.spec.f = lp.spec.f.with_tikhonov(std::stod(cf.get("problem", "mu")));

  // Set.
  if (cf.has("problem", "set_file")) {
    lp.spec.set = load_set_file(io::join_path(dir, cf.get("problem", "set_file")));
  } else {
    RunConfig sc;
    sc.set_tag = cf.get("problem", "set");
    sc.n = std::stol(cf.get("problem", "n"));
    if (cf.has("problem", "m")) sc.m = std::stol(cf.get("problem", "m"));
    if (cf.has("problem", "k")) sc.k = std::stol(cf.get("problem", "k"));
    if (cf.has("problem", "p")) sc.p_block = std::stol(cf.get("problem", "p"));
    if (cf.has("problem", "radius")) sc.radius = std::stod(cf.get("problem", "radius"));
    sc.norm = cf.get_or("problem", "norm", "frobenius");
    lp.spec.set = load_set(sc);
  }
  lp.spec.r = std::stol(cf.get_or("problem", "r", "1"));
  lp.spec.nu = std::stod(cf.get_or("problem", "nu", "0"));

  // Penalty defaults.
  if (cf.sections.count("penalty")) {
    const std::string kind = cf.get_or("penalty", "kind", "dc");
    if (kind == "dc")
      lp.config.kind = PenaltyKind::DcKyfan;
    else if (kind == "schatten")
      lp.config.kind = PenaltyKind::SchattenP;
    else if (kind == "truncdiff")
      lp.config.kind = PenaltyKind::TruncatedDiff;
    else
      throw std::invalid_argument(path + ": unknown penalty kind '" + kind + "'");
    if (cf.has("penalty", "rho")) lp.config.rho = std::stod(cf.get("penalty", "rho"));
    if (cf.has("penalty", "p")) lp.config.p = std::stod(cf.get("penalty", "p"));
    if (cf.has("penalty", "step")) lp.config.step = std::stod(cf.get("penalty", "step"));
    if (cf.has("penalty", "schedule"))
      lp.config.rho_schedule = parse_number_list(cf.get("penalty", "schedule"));
    if (cf.has("penalty", "inner_tol"))
      lp.config.inner_tol = std::stod(cf.get("penalty", "inner_tol"));
    if (cf.has("penalty", "outer_tol"))
      lp.config.outer_tol = std::stod(cf.get("penalty", "outer_tol"));
    if (cf.has("penalty", "max_iters"))
      lp.config.max_iters = std::stoi(cf.get("penalty", "max_iters"));
  }
  return lp;
}

SandwichStats run_sandwich_suite(int samples, std::uint64_t seed) {
  SandwichStats st;
  std::vector<SandwichStats> partial(samples);
  Rng root(seed);
  parallel_for(samples, [&](Eigen::Index i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % 8);
    const Eigen::Index m = n + static_cast<Eigen::Index>(rng.next_u64() % (9 - n));
    const Eigen::MatrixXd X = rng.gaussian_matrix(n, m);
    const Eigen::VectorXd sigma = spectral::singular_values(X);
    SandwichStats& mine = partial[i];
    for (Eigen::Index r = 1; r <= n; ++r) {
      const double theta = spectral::tail_sum(sigma, r);
      const auto [hr, eta] = spectral::truncated_residual(sigma, r);
      (void)hr;
      ++mine.checks;
      const double lower_gap = 0.5 * theta - eta;  // must be <= 0
      const double upper_gap = eta - theta;        // must be <= 0
      if (lower_gap > 1e-9 || upper_gap > 1e-9) ++mine.violations;
      mine.max_lower_gap = std::max(mine.max_lower_gap, lower_gap);
      mine.max_upper_gap = std::max(mine.max_upper_gap, upper_gap);
    }
  });
  for (const auto& p : partial) {
    st.checks += p.checks;
    st.violations += p.violations;
    st.max_lower_gap = std::max(st.max_lower_gap, p.max_lower_gap);
    st.max_upper_gap = std::max(st.max_upper_gap, p.max_upper_gap);
  }
  return st;
}

namespace {

Json certificate_json(const Certificate& cert) {
  Json j;
  j["outcome"] = calmness::outcome_name(cert.outcome);
  j["method"] = calmness::method_name(cert.method);
  j["omega_model_dim"] = cert.omega_model_dim;
  j["rank_model_dim"] = cert.rank_model_dim;
  j["intersection_dim"] = cert.intersection_dim;
  j["lp_optimum"] = cert.lp_optimum;
  j["explanation"] = cert.explanation;
  if (cert.witness) j["witness"] = report::matrix_to_json(*cert.witness);
  return j;
}

Json modulus_json(const ModulusReport& rep) {
  Json j;
  j["samples_used"] = rep.samples_used;
  j["samples_skipped"] = rep.samples_skipped;
  j["kappa_hat"] = rep.kappa_hat;
  j["ratio_deciles"] = rep.ratio_deciles;
  j["decile_counts"] = rep.decile_counts;
  j["worst_ratio"] = rep.worst_ratio;
  if (rep.worst_sample.size()) j["worst_sample"] = report::matrix_to_json(rep.worst_sample);
  j["noncompact_warning"] = rep.noncompact_warning;
  if (rep.delta > 0) j["delta"] = rep.delta;
  return j;
}

void write_ratio_csv(const std::string& path, const ModulusReport& rep) {
  report::CsvWriter csv({"index", "residual", "ratio"});
  for (size_t i = 0; i < rep.sample_ratios.size(); ++i)
    csv.add_row({static_cast<double>(i), rep.sample_residuals[i], rep.sample_ratios[i]});
  csv.write(path);
}

PenaltyKind parse_penalty_kind(const std::string& s) {
  if (s == "dc" || s == "dc-kyfan") return PenaltyKind::DcKyfan;
  if (s == "schatten" || s == "schatten-p") return PenaltyKind::SchattenP;
  if (s == "truncdiff" || s == "truncated-diff") return PenaltyKind::TruncatedDiff;
  throw std::invalid_argument("unknown penalty kind '" + s + "'");
}

surrogate::SurrogateFamily parse_family(const std::string& s) {
  if (s == "linear") return surrogate::SurrogateFamily::linear();
  if (s == "quad-shift") return surrogate::SurrogateFamily::quad_shift();
  throw std::invalid_argument("unknown surrogate family '" + s + "'");
}

}  // namespace

surrogate::SurrogateFamily load_family_file(const std::string& path) {
  const io::ConfigFile cf = io::parse_config_file(path);
  const std::string tag = cf.get("", "tag");
  if (tag != "piecewise") return parse_family(tag);
  const double t_star = std::stod(cf.get("", "t_star"));
  std::vector<std::pair<double, double>> knots;
  std::istringstream is(cf.get("", "breakpoints"));
  std::string tok;
  while (is >> tok) {
    const size_t at = tok.find(':');
    if (at == std::string::npos)
      throw std::invalid_argument(path + ": breakpoints need 't:phi' pairs, got '" + tok + "'");
    knots.emplace_back(std::stod(tok.substr(0, at)), std::stod(tok.substr(at + 1)));
  }
  return surrogate::SurrogateFamily::piecewise(std::move(knots), t_star);
}

namespace {

std::vector<std::string> config_echo(const RunConfig& cfg) {
  std::vector<std::string> e;
  const auto add = [&](const std::string& k, const std::string& v) {
    if (!v.empty()) e.push_back(k + " = " + v);
  };
  add("set", cfg.set_tag);
  add("set_file", cfg.set_file);
  if (cfg.n) add("n", std::to_string(cfg.n));
  if (cfg.m) add("m", std::to_string(cfg.m));
  add("r", std::to_string(cfg.r));
  add("problem", cfg.problem_file);
  add("point", cfg.point_file);
  add("x0", cfg.x0_file);
  add("penalty", cfg.penalty_kind);
  add("family", cfg.family);
  if (!cfg.schedule.empty()) {
    std::string s;
    for (double v : cfg.schedule) s += (s.empty() ? "" : ",") + report::CsvWriter::format(v);
    add("schedule", s);
  }
  add("samples", std::to_string(cfg.samples));
  add("starts", std::to_string(cfg.starts));
  add("out", cfg.out_prefix);
  return e;
}

int run_certify(const RunConfig& cfg, Json& j) {
  const ConstraintSet S = load_set(cfg);
  const Eigen::MatrixXd X = io::read_matrix_text_file(cfg.point_file).values;
  int criterion = cfg.criterion;
  if (criterion == 0)
    criterion = (S.psd_part && S.family != SetFamily::PsdCone) ? 2 : 1;
  std::optional<calmness::Method> force;
  if (cfg.method == "nullspace") force = calmness::Method::Nullspace;
  else if (cfg.method == "lp") force = calmness::Method::Lp;
  else if (!cfg.method.empty()) throw std::invalid_argument("unknown method '" + cfg.method + "'");

  const Certificate cert = criterion == 1 ? calmness::check_criterion1(S, cfg.r, X, force)
                                          : calmness::check_criterion2(S, cfg.r, X, force);
  j["criterion"] = criterion;
  j["certificate"] = certificate_json(cert);
  if (!cfg.expect.empty()) {
    const std::string got = calmness::outcome_name(cert.outcome);
    const std::string want =
        cfg.expect == "trivial" ? "trivial-intersection"
                                : (cfg.expect == "witness" ? "witness-found" : cfg.expect);
    j["expected"] = want;
    if (got != want) return 1;
  }
  return 0;
}

int run_ebound(const RunConfig& cfg, Json& j) {
  const ConstraintSet S = load_set(cfg);
  const Eigen::MatrixXd X = io::read_matrix_text_file(cfg.point_file).values;
  const ModulusReport rep =
      calmness::estimate_local_ebound(S, cfg.r, X, cfg.delta, cfg.samples, cfg.seed);
  j["report"] = modulus_json(rep);
  write_ratio_csv(cfg.out_prefix + "_ratios.csv", rep);
  return 0;
}

int run_modulus(const RunConfig& cfg, Json& j) {
  const ConstraintSet S = load_set(cfg);
  calmness::SampleSpec spec;
  spec.samples = cfg.samples;
  spec.seed = cfg.seed;
  const ModulusReport rep = calmness::estimate_global_modulus(S, cfg.r, spec);
  j["report"] = modulus_json(rep);
  write_ratio_csv(cfg.out_prefix + "_ratios.csv", rep);
  return 0;
}

void write_trace_csv(const std::string& path, const penalty::SolveTrace& tr) {
  report::CsvWriter csv({"iter", "f", "penalty", "theta", "rank"});
  for (size_t i = 0; i < tr.iterates.size(); ++i) {
    const auto& it = tr.iterates[i];
    csv.add_row({static_cast<double>(i), it.objective - it.penalty_term, it.penalty_term,
                 it.theta, static_cast<double>(it.rank)});
  }
  csv.write(path);
}

int run_solve(const RunConfig& cfg, Json& j) {
  LoadedProblem lp = load_problem(cfg.problem_file);
  if (!cfg.penalty_kind.empty()) lp.config.kind = parse_penalty_kind(cfg.penalty_kind);
  if (cfg.rho > 0) lp.config.rho = cfg.rho;
  if (cfg.schatten_p > 0) lp.config.p = cfg.schatten_p;
  if (cfg.max_iters > 0) lp.config.max_iters = cfg.max_iters;
  Eigen::MatrixXd X0 = cfg.x0_file.empty()
                           ? Eigen::MatrixXd::Zero(lp.spec.set.rows, lp.spec.set.cols)
                           : io::read_matrix_text_file(cfg.x0_file).values;
  const auto tr = penalty::solve_multistart(lp.spec, lp.config, X0, cfg.starts, cfg.seed);
  j["penalty_kind"] = penalty::penalty_kind_name(lp.config.kind);
  j["rho"] = lp.config.rho;
  j["iterations"] = tr.iterates.size() - 1;
  j["converged"] = tr.converged;
  j["objective"] = tr.iterates.back().objective;
  j["f_value"] = tr.iterates.back().objective - tr.iterates.back().penalty_term;
  j["theta"] = tr.iterates.back().theta;
  j["final_rank"] = tr.final_rank;
  j["step_halvings"] = tr.step_halvings;
  j["local_probe_passed"] = tr.local_probe_passed;
  write_trace_csv(cfg.out_prefix + "_trace.csv", tr);
  io::write_matrix_text_file(cfg.out_prefix + "_X.txt",
                             Matrix{tr.X, lp.spec.set.symmetric_space});
  return 0;
}

int run_continuation(const RunConfig& cfg, Json& j) {
  LoadedProblem lp = load_problem(cfg.problem_file);
  if (!cfg.penalty_kind.empty()) lp.config.kind = parse_penalty_kind(cfg.penalty_kind);
  if (!cfg.schedule.empty()) lp.config.rho_schedule = cfg.schedule;
  if (cfg.max_iters > 0) lp.config.max_iters = cfg.max_iters;
  Eigen::MatrixXd X0 = cfg.x0_file.empty()
                           ? Eigen::MatrixXd::Zero(lp.spec.set.rows, lp.spec.set.cols)
                           : io::read_matrix_text_file(cfg.x0_file).values;
  const auto rep = penalty::rho_continuation(lp.spec, lp.config, X0, cfg.starts, cfg.seed);
  j["penalty_kind"] = penalty::penalty_kind_name(lp.config.kind);
  j["achieved"] = rep.achieved;
  if (rep.threshold_rho) j["threshold_rho"] = *rep.threshold_rho;
  j["final_objective"] = rep.final_objective;
  if (rep.oracle_objective) j["oracle_objective"] = *rep.oracle_objective;
  Json entries = Json::array();
  report::CsvWriter csv({"rho", "f", "theta", "rank", "sigma_tail"});
  for (const auto& e : rep.entries) {
    Json je;
    je["rho"] = e.rho;
    je["f"] = e.objective;
    je["theta"] = e.theta;
    je["rank"] = e.rank;
    je["sigma_tail"] = e.sigma_tail;
    entries.push_back(je);
    csv.add_row({e.rho, e.objective, e.theta, static_cast<double>(e.rank), e.sigma_tail});
  }
  j["entries"] = entries;
  csv.write(cfg.out_prefix + "_entries.csv");
  if (rep.X.size())
    io::write_matrix_text_file(cfg.out_prefix + "_X.txt",
                               Matrix{rep.X, lp.spec.set.symmetric_space});
  return 0;
}

int run_surrogate(const RunConfig& cfg, Json& j) {
  LoadedProblem lp = load_problem(cfg.problem_file);
  if (cfg.nu >= 0) lp.spec.nu = cfg.nu;
  const auto F =
      cfg.family_file.empty() ? parse_family(cfg.family) : load_family_file(cfg.family_file);
  std::vector<double> schedule = cfg.schedule;
  if (schedule.empty()) schedule = {0.5, 1, 2, 4, 8, 16};
  const auto rep =
      surrogate::equivalence_report(lp.spec, F, schedule, std::max(cfg.starts, 1), cfg.seed);
  j["family"] = F.name();
  j["nu"] = lp.spec.nu;
  j["oracle_value"] = rep.oracle_value;
  j["oracle_rank"] = rep.oracle_rank;
  if (rep.matched_rho) j["matched_rho"] = *rep.matched_rho;
  Json entries = Json::array();
  report::CsvWriter csv({"rho", "surrogate_value", "regularized_value", "rank", "matches"});
  for (const auto& e : rep.entries) {
    Json je;
    je["rho"] = e.rho;
    je["surrogate_value"] = e.surrogate_value;
    je["regularized_value"] = e.regularized_value;
    je["rank"] = e.rank;
    je["matches"] = e.matches;
    entries.push_back(je);
    csv.add_row({e.rho, e.surrogate_value, e.regularized_value, static_cast<double>(e.rank),
                 e.matches ? 1.0 : 0.0});
  }
  j["entries"] = entries;
  csv.write(cfg.out_prefix + "_entries.csv");
  return 0;
}

int run_pam(const RunConfig& cfg, Json& j) {
  const ConstraintSet S = load_set(cfg);
  const Eigen::MatrixXd X0 = io::read_matrix_text_file(cfg.x0_file).values;
  calmness::PamOptions opts;
  opts.c = cfg.pam_c;
  opts.tol = cfg.tol;
  if (cfg.max_iters > 0) opts.max_iters = cfg.max_iters;
  const auto tr = calmness::pam_feasibility(S, cfg.r, X0, opts);
  j["iterations"] = tr.iterations;
  j["converged"] = tr.converged;
  j["terminal_dist"] = tr.dist.back();
  j["fitted_rate"] = tr.fitted_rate;
  if (!tr.diagnostic.empty()) j["diagnostic"] = tr.diagnostic;
  report::CsvWriter csv({"iter", "dist"});
  for (size_t i = 0; i < tr.dist.size(); ++i) csv.add_row({static_cast<double>(i), tr.dist[i]});
  csv.write(cfg.out_prefix + "_trace.csv");
  io::write_matrix_text_file(cfg.out_prefix + "_X.txt", Matrix{tr.X, S.symmetric_space});
  return 0;
}

int run_sandwich(const RunConfig& cfg, Json& j) {
  const SandwichStats st = run_sandwich_suite(cfg.samples, cfg.seed);
  j["checks"] = st.checks;
  j["violations"] = st.violations;
  j["max_lower_gap"] = st.max_lower_gap;
  j["max_upper_gap"] = st.max_upper_gap;
  report::CsvWriter csv({"checks", "violations", "max_lower_gap", "max_upper_gap"});
  csv.add_row({static_cast<double>(st.checks), static_cast<double>(st.violations),
               st.max_lower_gap, st.max_upper_gap});
  csv.write(cfg.out_prefix + "_summary.csv");
  return st.violations == 0 ? 0 : 1;
}

}  // namespace

int run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Json j = report::report_header(
      [&] {
        switch (cfg.command) {
          case Command::Certify: return "certify";
          case Command::Ebound: return "ebound";
          case Command::Modulus: return "modulus";
          case Command::Solve: return "solve";
          case Command::Continuation: return "continuation";
          case Command::Surrogate: return "surrogate";
          case Command::Pam: return "pam";
          case Command::SandwichSuite: return "sandwich-suite";
        }
        return "?";
      }(),
      config_echo(cfg), cfg.seed);

  int status = 0;
  switch (cfg.command) {
    case Command::Certify: status = run_certify(cfg, j); break;
    case Command::Ebound: status = run_ebound(cfg, j); break;
    case Command::Modulus: status = run_modulus(cfg, j); break;
    case Command::Solve: status = run_solve(cfg, j); break;
    case Command::Continuation: status = run_continuation(cfg, j); break;
    case Command::Surrogate: status = run_surrogate(cfg, j); break;
    case Command::Pam: status = run_pam(cfg, j); break;
    case Command::SandwichSuite: status = run_sandwich(cfg, j); break;
  }
  j["status"] = status;
  report::write_json_file(cfg.out_prefix + ".json", j);

  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  // Wall time stays on the console so report files are reproducible.
  std::printf("%s: status %d, %lld ms, report %s.json\n", j["command"].get<std::string>().c_str(),
              status, static_cast<long long>(ms), cfg.out_prefix.c_str());
  return status;
}

}  // namespace rankcalm::cli
