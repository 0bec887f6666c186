#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pdeopt/ocp.hpp"
#include "pdeopt/optim.hpp"

namespace pdeopt {

struct InstanceConfig {
  std::string name = "transport";  // "transport" | "diffusion"
  double beta = 1e-4;
  double sigma = 1.0;   // Gaussian source width (transport)
  int dimension = 2;    // parameter dimension (diffusion)
};

std::shared_ptr<ProblemInstance> make_instance(const InstanceConfig& cfg);

struct QuadStudyConfig {
  std::vector<int> q_list = {1, 2, 3, 4};
  int q_ref = 6;
  int mesh_m = 8;
  double cg_tol = 1e-13;
};

struct FeStudyConfig {
  std::vector<int> m_list = {2, 4, 8, 16, 32, 64};
  int m_ref = 256;
  int q = 1;
  double cg_tol = 1e-13;
};

struct RateStudyConfig {
  std::vector<int> q_list = {2, 3};
  int mesh_m = 8;
  int repetitions = 20;
  long iterations = 5000;
  double tau = 4.0;
  double fit_lo = 0.25;  // post-transient window start (fraction of iterations)
  double fit_hi = 1.0;
  double cg_tol = 1e-13;
};

struct StepStudyConfig {
  std::vector<double> taus = {0.01, 0.1, 1.0, 4.0, 10.0, 100.0};
  int q = 2;
  int mesh_m = 8;
  int repetitions = 5;
  long iterations = 2000;
  double cg_tol = 1e-12;
};

struct VsCgStudyConfig {
  int q = 2;
  int mesh_m = 16;
  long budget_sweeps = 24;  // total budget in units of 2n PDE solves
  double tau = 4.0;
  double cg_tol = 1e-12;
};

struct ComplexityStudyConfig {
  std::vector<double> tolerances = {1e-1, 3.162e-2, 1e-2};
  double tau = 4.0;
  double gamma = 3.0;  // work model W = k_max * m^(d*gamma), d = 2
  int ref_mesh_factor = 4;
  int ref_q_extra = 2;
  double cg_tol = 1e-12;
};

struct StudyConfig {
  InstanceConfig instance;
  std::uint64_t seed = 20260810;
  int threads = 1;
  std::string out_dir = "out";

  QuadStudyConfig quadrature;
  FeStudyConfig fe;
  RateStudyConfig saga_rate;
  StepStudyConfig step_sensitivity;
  VsCgStudyConfig saga_vs_cg;
  ComplexityStudyConfig complexity;

  static StudyConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// ---------------------------------------------------------------------------
// Results.

struct QuadStudyResult {
  std::vector<int> q;
  std::vector<double> err_sq;  // squared L2 control error vs the q_ref solution
  double e2 = 0.0;             // fit err_sq ~ e2 * 10^(-s q)
  double s = 0.0;
};

struct FeStudyResult {
  std::vector<int> m;
  std::vector<double> err_sq;  // squared L2 control error vs the m_ref solution
  double e3 = 0.0;             // fit err_sq ~ e3 * h^4
};

struct RateStudyRow {
  int q = 0;
  std::size_t n = 0;
  double eps_th = 0.0;   // 1/(2n)
  double eps_est = 0.0;
  double ratio = 0.0;
  double e1 = 0.0;
  double r2 = 0.0;
};

struct RateStudyResult {
  std::vector<RateStudyRow> rows;
};

struct StepStudyRow {
  double tau = 0.0;
  bool diverged = false;
  long diverged_at = -1;
  double eps_est = 0.0;  // NaN when diverged
  double r2 = 0.0;
  double final_err = 0.0;
};

struct StepStudyResult {
  std::vector<StepStudyRow> rows;
  std::vector<IterTrace> mean_traces;  // one per tau, mean over repetitions
};

struct VsCgStudyResult {
  double initial_err = 0.0;
  IterTrace saga;  // err vs cumulative PDE solves
  IterTrace cg;
  // Step-function evaluation of a trace at a solve budget.
  static double err_at_budget(const IterTrace& trace, double initial_err, long budget);
};

// Calibrated three-term error model: err^2(k, q, h) ~
//   e1 (1 - eps(q))^k + e2 10^(-s q) + e3 h^4,
// with eps(q) = 1/(2 q^M) saturated at the fitted step-size-limited rate
// eps0 (the optimizer cannot contract faster than its stable step allows).
struct CalibratedModel {
  double e1 = 3.0;
  double e2 = 10.0;
  double s = 3.7;
  double e3 = 3.0;
  double eps0 = 7e-4;
  int parameter_dim = 5;

  double eps_of_q(int q) const;
  int q_of_tol(double tol) const;
  int m_of_tol(double tol) const;      // ceil(1/h(tol)), h = (tol^2/e3)^(1/4)
  long kmax_of_tol(double tol) const;  // ceil(2 ln(sqrt(e1)/tol) / -ln(1-eps))
  double predicted_mse(double tol) const;
};

struct ComplexityRow {
  double tol = 0.0;
  int q = 0;
  int m = 0;  // 1/h
  long k_max = 0;
  double err_at_kmax = 0.0;
  long k_fst = -1;  // first iteration meeting tol, -1 if never
  double err_at_kfst = 0.0;
  double work = 0.0;  // k_max * m^(d*gamma)
  long pde_solves = 0;
};

struct ComplexityStudyResult {
  std::vector<ComplexityRow> rows;
  CalibratedModel model;
};

// ---------------------------------------------------------------------------
// Drivers. Every study is deterministic given (config, seed).

QuadStudyResult run_quadrature_study(const StudyConfig& cfg);
FeStudyResult run_fe_study(const StudyConfig& cfg);
RateStudyResult run_saga_rate_study(const StudyConfig& cfg);
StepStudyResult run_step_sensitivity_study(const StudyConfig& cfg);
VsCgStudyResult run_saga_vs_cg_study(const StudyConfig& cfg);
ComplexityStudyResult run_complexity_study(const StudyConfig& cfg, const CalibratedModel& model);

// Runs quadrature, FE, and rate studies to calibrate the error model.
CalibratedModel calibrate_model(const StudyConfig& cfg, QuadStudyResult* quad_out = nullptr,
                                FeStudyResult* fe_out = nullptr,
                                RateStudyResult* rate_out = nullptr);

// ---------------------------------------------------------------------------
// Output. Each study writes <study>_<param>.csv files plus a manifest.json
// recording the config hash, git revision and master seed.

void write_quad_csv(const std::string& dir, const QuadStudyResult& r);
void write_fe_csv(const std::string& dir, const FeStudyResult& r);
void write_rate_csv(const std::string& dir, const RateStudyResult& r);
void write_step_csv(const std::string& dir, const StepStudyResult& r);
void write_vs_cg_csv(const std::string& dir, const VsCgStudyResult& r);
void write_complexity_csv(const std::string& dir, const ComplexityStudyResult& r);
void write_manifest(const std::string& dir, const StudyConfig& cfg,
                    const std::vector<std::string>& outputs);

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace pdeopt
