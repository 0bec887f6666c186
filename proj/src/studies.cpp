#include "pdeopt/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pdeopt/rng.hpp"
#include "pdeopt/summation.hpp"

namespace pdeopt {

namespace {

using nlohmann::json;

std::shared_ptr<const DiscreteSpace> make_space(const ProblemInstance& inst, int m) {
  return std::make_shared<DiscreteSpace>(build_mesh(m, inst.boundary()));
}

// Reference solves must actually converge; a silent non-converged reference
// would poison every error column downstream.
Eigen::VectorXd solve_cg_checked(const DiscreteOcp& ocp, const CgConfig& cg) {
  CgResult res = solve_cg(ocp, cg);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "reference CG did not reach |grad| <= " << cg.tol_grad << " (got " << res.grad_norm
        << " after " << res.iterations << " iterations)";
    throw std::runtime_error(msg.str());
  }
  return std::move(res.u);
}

DiscreteOcp make_ocp(std::shared_ptr<const ProblemInstance> inst,
                     std::shared_ptr<const DiscreteSpace> space, int q) {
  auto rule = QuadratureRule::tensor_gauss_legendre(q, inst->parameter_box());
  return DiscreteOcp(std::move(inst), std::move(space), std::move(rule));
}

std::uint64_t study_seed(const StudyConfig& cfg, const char* study, long a, long b = 0) {
  return derive_seed(derive_seed(cfg.seed, fnv1a_hash(study)),
                     static_cast<std::uint64_t>(a) * 1000003ull + static_cast<std::uint64_t>(b));
}

// Runs fn(i) for i in [0, count), optionally on a small worker pool, and
// collects results in index order so that outputs never depend on scheduling.
template <typename F>
auto run_indexed(int count, int threads, F&& fn) {
  using R = std::invoke_result_t<F&, int>;
  std::vector<R> out(static_cast<std::size_t>(count));
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) out[i] = fn(i);
  };
  std::vector<std::thread> pool;
  const int width = std::min(threads, count);
  pool.reserve(width);
  for (int t = 0; t < width; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

struct FitLine {
  double slope = 0.0;
  double intercept = 0.0;
};

FitLine fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  FitLine f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + tmp);
    os << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string csv_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

std::string git_revision() {
  FILE* pipe = ::popen("git rev-parse HEAD 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[128] = {0};
  std::string out;
  while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
  ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::shared_ptr<ProblemInstance> make_instance(const InstanceConfig& cfg) {
  if (cfg.name == "transport") return std::make_shared<TransportInstance>(cfg.beta, cfg.sigma);
  if (cfg.name == "diffusion") return std::make_shared<DiffusionInstance>(cfg.dimension, cfg.beta);
  throw std::invalid_argument("unknown instance: " + cfg.name);
}

// ---------------------------------------------------------------------------
// Quadrature error study.

QuadStudyResult run_quadrature_study(const StudyConfig& cfg) {
  const auto& qc = cfg.quadrature;
  if (qc.q_list.empty()) throw std::invalid_argument("quadrature study: empty q list");
  if (qc.q_ref <= *std::max_element(qc.q_list.begin(), qc.q_list.end()))
    throw std::invalid_argument("quadrature study: q_ref must exceed every studied q");

  auto inst = make_instance(cfg.instance);
  auto space = make_space(*inst, qc.mesh_m);
  CgConfig cg;
  cg.tol_grad = qc.cg_tol;
  cg.max_iter = 400;

  const DiscreteOcp ref_ocp = make_ocp(inst, space, qc.q_ref);
  const Eigen::VectorXd u_ref = solve_cg_checked(ref_ocp, cg);

  QuadStudyResult out;
  for (int q : qc.q_list) {
    const DiscreteOcp ocp = make_ocp(inst, space, q);
    const Eigen::VectorXd u_q = solve_cg_checked(ocp, cg);
    const double err = space->l2_norm(u_q - u_ref);
    out.q.push_back(q);
    out.err_sq.push_back(err * err);
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < out.q.size(); ++i) {
    if (!(out.err_sq[i] > 0.0)) continue;
    xs.push_back(static_cast<double>(out.q[i]));
    ys.push_back(std::log10(out.err_sq[i]));
  }
  if (xs.size() >= 2) {
    const FitLine f = fit_line(xs, ys);
    out.s = -f.slope;
    out.e2 = std::pow(10.0, f.intercept);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FE error study.

FeStudyResult run_fe_study(const StudyConfig& cfg) {
  const auto& fc = cfg.fe;
  if (fc.m_list.empty()) throw std::invalid_argument("fe study: empty mesh list");
  if (fc.m_ref <= *std::max_element(fc.m_list.begin(), fc.m_list.end()))
    throw std::invalid_argument("fe study: reference mesh must be finer than every studied mesh");

  auto inst = make_instance(cfg.instance);
  CgConfig cg;
  cg.tol_grad = fc.cg_tol;
  cg.max_iter = 400;

  auto ref_space = make_space(*inst, fc.m_ref);
  const DiscreteOcp ref_ocp = make_ocp(inst, ref_space, fc.q);
  const Eigen::VectorXd u_ref = solve_cg_checked(ref_ocp, cg);

  FeStudyResult out;
  for (int m : fc.m_list) {
    auto space = make_space(*inst, m);
    const DiscreteOcp ocp = make_ocp(inst, space, fc.q);
    const Eigen::VectorXd u_m = solve_cg_checked(ocp, cg);
    const double err = ref_space->l2_norm(interpolate_p1(*space, u_m, *ref_space) - u_ref);
    out.m.push_back(m);
    out.err_sq.push_back(err * err);
  }

  // Fixed-order fit err^2 = e3 h^4.
  NeumaierSum acc;
  int used = 0;
  for (std::size_t i = 0; i < out.m.size(); ++i) {
    if (!(out.err_sq[i] > 0.0)) continue;
    acc.add(std::log10(out.err_sq[i]) + 4.0 * std::log10(static_cast<double>(out.m[i])));
    ++used;
  }
  if (used > 0) out.e3 = std::pow(10.0, acc.value() / used);
  return out;
}

// ---------------------------------------------------------------------------
// SAGA rate study.

RateStudyResult run_saga_rate_study(const StudyConfig& cfg) {
  const auto& rc = cfg.saga_rate;
  if (rc.repetitions < 2) throw std::invalid_argument("rate study: need >= 2 repetitions");

  auto inst = make_instance(cfg.instance);
  auto space = make_space(*inst, rc.mesh_m);
  CgConfig cg;
  cg.tol_grad = rc.cg_tol;
  cg.max_iter = 400;

  RateStudyResult out;
  for (int q : rc.q_list) {
    const DiscreteOcp ocp = make_ocp(inst, space, q);
    const Eigen::VectorXd u_star = solve_cg_checked(ocp, cg);
    const SamplingDistribution dist = SamplingDistribution::uniform(ocp.n());

    std::vector<IterTrace> traces = run_indexed(rc.repetitions, cfg.threads, [&](int rep) {
      SagaConfig sc;
      sc.tau = rc.tau;
      sc.k_max = rc.iterations;
      sc.seed = study_seed(cfg, "saga_rate", q, rep);
      return run_saga_is(ocp, sc, dist, ocp.zero_control(), &u_star).trace;
    });
    for (int rep = 0; rep < rc.repetitions; ++rep)
      if (traces[rep].diverged) {
        std::ostringstream msg;
        msg << "rate study: SAGA diverged at q=" << q << " rep=" << rep << " tau=" << rc.tau
            << " k=" << traces[rep].diverged_at;
        throw std::runtime_error(msg.str());
      }

    const RateFit fit = fit_exponential_rate(traces, rc.fit_lo, rc.fit_hi);
    RateStudyRow row;
    row.q = q;
    row.n = ocp.n();
    row.eps_th = 1.0 / (2.0 * static_cast<double>(ocp.n()));
    row.eps_est = fit.eps_est;
    row.ratio = fit.eps_est / row.eps_th;
    row.e1 = fit.e1;
    row.r2 = fit.r2;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step-size sensitivity study.

StepStudyResult run_step_sensitivity_study(const StudyConfig& cfg) {
  const auto& sc = cfg.step_sensitivity;
  auto inst = make_instance(cfg.instance);
  auto space = make_space(*inst, sc.mesh_m);
  CgConfig cg;
  cg.tol_grad = sc.cg_tol;
  cg.max_iter = 400;

  const DiscreteOcp ocp = make_ocp(inst, space, sc.q);
  const Eigen::VectorXd u_star = solve_cg_checked(ocp, cg);
  const SamplingDistribution dist = SamplingDistribution::uniform(ocp.n());

  StepStudyResult out;
  for (double tau : sc.taus) {
    std::vector<IterTrace> traces = run_indexed(sc.repetitions, cfg.threads, [&](int rep) {
      SagaConfig saga;
      saga.tau = tau;
      saga.k_max = sc.iterations;
      saga.seed = study_seed(cfg, "step_sensitivity", static_cast<long>(tau * 1000), rep);
      return run_saga_is(ocp, saga, dist, ocp.zero_control(), &u_star).trace;
    });
    bool diverged = false;
    long diverged_at = -1;
    for (const auto& t : traces)
      if (t.diverged) {
        diverged = true;
        diverged_at = diverged_at < 0 ? t.diverged_at : std::min(diverged_at, t.diverged_at);
      }

    // Mean error trace over the common prefix.
    std::size_t rows = traces.front().rows.size();
    for (const auto& t : traces) rows = std::min(rows, t.rows.size());
    IterTrace mean;
    mean.diverged = diverged;
    mean.diverged_at = diverged_at;
    for (std::size_t r = 0; r < rows; ++r) {
      NeumaierSum acc;
      for (const auto& t : traces) acc.add(t.rows[r].err_l2);
      TraceRow row = traces.front().rows[r];
      row.err_l2 = acc.value() / static_cast<double>(traces.size());
      mean.rows.push_back(row);
    }

    StepStudyRow row;
    row.tau = tau;
    row.diverged = diverged;
    row.diverged_at = diverged_at;
    row.final_err = rows ? mean.rows.back().err_l2 : std::numeric_limits<double>::quiet_NaN();
    if (!diverged) {
      const RateFit fit = fit_exponential_rate(traces, 0.25, 1.0);
      row.eps_est = fit.eps_est;
      row.r2 = fit.r2;
    } else {
      row.eps_est = std::numeric_limits<double>::quiet_NaN();
      row.r2 = std::numeric_limits<double>::quiet_NaN();
    }
    out.rows.push_back(row);
    out.mean_traces.push_back(std::move(mean));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SAGA vs CG at matched discretization.

double VsCgStudyResult::err_at_budget(const IterTrace& trace, double initial_err, long budget) {
  double err = initial_err;
  for (const auto& row : trace.rows) {
    if (row.pde_solves > budget) break;
    err = row.err_l2;
  }
  return err;
}

VsCgStudyResult run_saga_vs_cg_study(const StudyConfig& cfg) {
  const auto& vc = cfg.saga_vs_cg;
  auto inst = make_instance(cfg.instance);
  auto space = make_space(*inst, vc.mesh_m);
  const DiscreteOcp ocp = make_ocp(inst, space, vc.q);
  const long n = static_cast<long>(ocp.n());

  CgConfig cg_tight;
  cg_tight.tol_grad = vc.cg_tol;
  cg_tight.max_iter = 400;
  const Eigen::VectorXd u_star = solve_cg_checked(ocp, cg_tight);

  VsCgStudyResult out;
  const Eigen::VectorXd u0 = ocp.zero_control();
  out.initial_err = space->l2_norm(u0 - u_star);

  CgConfig cg_run;
  cg_run.tol_grad = vc.cg_tol;
  cg_run.max_iter = static_cast<int>(vc.budget_sweeps);
  out.cg = solve_cg(ocp, cg_run, u0, &u_star).trace;

  // Zero-initialized memory keeps the early iterations inside the solve
  // budget, which is the regime this comparison is about.
  SagaConfig saga;
  saga.tau = vc.tau;
  saga.k_max = vc.budget_sweeps * n;
  saga.seed = study_seed(cfg, "saga_vs_cg", 0);
  saga.init = SagaInit::Zero;
  auto run = run_saga_is(ocp, saga, SamplingDistribution::uniform(ocp.n()), u0, &u_star);
  out.saga = std::move(run.trace);
  return out;
}

// ---------------------------------------------------------------------------
// Calibrated model and complexity driver.

double CalibratedModel::eps_of_q(int q) const {
  return std::min(eps0, 0.5 / std::pow(static_cast<double>(q), parameter_dim));
}

int CalibratedModel::q_of_tol(double tol) const {
  const double exact = std::log10(e2 / (tol * tol)) / s;
  return std::max(1, static_cast<int>(std::ceil(exact - 1e-12)));
}

int CalibratedModel::m_of_tol(double tol) const {
  const double inv_h = std::pow(e3 / (tol * tol), 0.25);
  return std::max(2, static_cast<int>(std::ceil(inv_h - 1e-12)));
}

long CalibratedModel::kmax_of_tol(double tol) const {
  const double eps = eps_of_q(q_of_tol(tol));
  const double num = 2.0 * std::log(std::sqrt(e1) / tol);
  const double den = -std::log1p(-eps);
  return std::max<long>(1, static_cast<long>(std::ceil(num / den)));
}

double CalibratedModel::predicted_mse(double tol) const {
  const int q = q_of_tol(tol);
  const int m = m_of_tol(tol);
  const long k = kmax_of_tol(tol);
  const double h = 1.0 / m;
  return e1 * std::pow(1.0 - eps_of_q(q), static_cast<double>(k)) +
         e2 * std::pow(10.0, -s * q) + e3 * h * h * h * h;
}

ComplexityStudyResult run_complexity_study(const StudyConfig& cfg, const CalibratedModel& model) {
  const auto& cc = cfg.complexity;
  if (cc.tolerances.empty()) throw std::invalid_argument("complexity study: no tolerances");

  auto inst = make_instance(cfg.instance);
  CalibratedModel m = model;
  m.parameter_dim = inst->dimension();

  int max_q = 1, max_m = 2;
  for (double tol : cc.tolerances) {
    max_q = std::max(max_q, m.q_of_tol(tol));
    max_m = std::max(max_m, m.m_of_tol(tol));
  }
  const int q_ref = max_q + cc.ref_q_extra;
  const int m_ref = cc.ref_mesh_factor * max_m;

  CgConfig cg;
  cg.tol_grad = cc.cg_tol;
  cg.max_iter = 400;
  auto ref_space = make_space(*inst, m_ref);
  const DiscreteOcp ref_ocp = make_ocp(inst, ref_space, q_ref);
  const Eigen::VectorXd u_ref = solve_cg_checked(ref_ocp, cg);

  ComplexityStudyResult out;
  out.model = m;
  for (double tol : cc.tolerances) {
    ComplexityRow row;
    row.tol = tol;
    row.q = m.q_of_tol(tol);
    row.m = m.m_of_tol(tol);
    row.k_max = m.kmax_of_tol(tol);
    if (row.q > 12 || row.m > 512) {
      std::ostringstream msg;
      msg << "complexity study: tol=" << tol << " needs q=" << row.q << ", 1/h=" << row.m
          << ", beyond the configured caps (q <= 12, 1/h <= 512)";
      throw std::runtime_error(msg.str());
    }
    row.work = static_cast<double>(row.k_max) * std::pow(static_cast<double>(row.m), 2.0 * cc.gamma);

    auto space = make_space(*inst, row.m);
    const DiscreteOcp ocp = make_ocp(inst, space, row.q);
    SagaConfig saga;
    saga.tau = cc.tau;
    saga.k_max = row.k_max;
    saga.seed = study_seed(cfg, "complexity", static_cast<long>(1.0 / tol));
    saga.error_metric = [&](const Eigen::VectorXd& u) {
      return ref_space->l2_norm(interpolate_p1(*space, u, *ref_space) - u_ref);
    };
    auto run = run_saga_is(ocp, saga, SamplingDistribution::uniform(ocp.n()), ocp.zero_control());
    if (run.diverged) throw std::runtime_error("complexity study: SAGA diverged");

    row.err_at_kmax = run.trace.final_err();
    row.k_fst = run.trace.first_hit(tol);
    if (row.k_fst >= 0) row.err_at_kfst = run.trace.rows[row.k_fst - 1].err_l2;
    row.pde_solves = run.trace.rows.empty() ? 0 : run.trace.rows.back().pde_solves;
    out.rows.push_back(row);
  }
  return out;
}

CalibratedModel calibrate_model(const StudyConfig& cfg, QuadStudyResult* quad_out,
                                FeStudyResult* fe_out, RateStudyResult* rate_out) {
  const QuadStudyResult quad = run_quadrature_study(cfg);
  const FeStudyResult fe = run_fe_study(cfg);
  const RateStudyResult rate = run_saga_rate_study(cfg);

  CalibratedModel model;
  model.e2 = quad.e2;
  model.s = quad.s;
  model.e3 = fe.e3;
  model.parameter_dim = make_instance(cfg.instance)->dimension();
  if (!rate.rows.empty()) {
    // e1 from the largest studied q (squared: the fit tracks the error
    // norm), eps0 as the fitted per-iteration rate ceiling.
    const auto& last = rate.rows.back();
    model.e1 = last.e1 * last.e1;
    if (last.eps_est > 0.0) model.eps0 = last.eps_est;
  }
  if (quad_out) *quad_out = quad;
  if (fe_out) *fe_out = fe;
  if (rate_out) *rate_out = rate;
  return model;
}

// ---------------------------------------------------------------------------
// CSV + manifest output.

namespace {

std::string fmt_row(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

}  // namespace

void write_quad_csv(const std::string& dir, const QuadStudyResult& r) {
  std::ostringstream os;
  os << "q,err_sq\n";
  for (std::size_t i = 0; i < r.q.size(); ++i)
    os << fmt_row("%d,%.17g\n", r.q[i], r.err_sq[i]);
  os << fmt_row("# fit: err_sq = %.17g * 10^(-%.17g q)\n", r.e2, r.s);
  write_text_atomic(csv_path(dir, "quadrature_error.csv"), os.str());
}

void write_fe_csv(const std::string& dir, const FeStudyResult& r) {
  std::ostringstream os;
  os << "m,h,err_sq\n";
  for (std::size_t i = 0; i < r.m.size(); ++i)
    os << fmt_row("%d,%.17g,%.17g\n", r.m[i], 1.0 / r.m[i], r.err_sq[i]);
  os << fmt_row("# fit: err_sq = %.17g * h^4\n", r.e3);
  write_text_atomic(csv_path(dir, "fe_error.csv"), os.str());
}

void write_rate_csv(const std::string& dir, const RateStudyResult& r) {
  std::ostringstream os;
  os << "q,n,eps_th,eps_est,ratio,e1,r2\n";
  for (const auto& row : r.rows)
    os << fmt_row("%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.q, row.n, row.eps_th,
                  row.eps_est, row.ratio, row.e1, row.r2);
  write_text_atomic(csv_path(dir, "saga_rate.csv"), os.str());
}

void write_step_csv(const std::string& dir, const StepStudyResult& r) {
  std::ostringstream os;
  os << "tau,diverged,diverged_at,eps_est,r2,final_err\n";
  for (const auto& row : r.rows)
    os << fmt_row("%.17g,%d,%ld,%.17g,%.17g,%.17g\n", row.tau, row.diverged ? 1 : 0,
                  row.diverged_at, row.eps_est, row.r2, row.final_err);
  write_text_atomic(csv_path(dir, "step_sensitivity.csv"), os.str());
  for (std::size_t i = 0; i < r.mean_traces.size(); ++i) {
    std::ostringstream ts;
    write_trace_csv(ts, r.mean_traces[i]);
    std::ostringstream name;
    name << "step_sensitivity_tau" << r.rows[i].tau << ".csv";
    write_text_atomic(csv_path(dir, name.str()), ts.str());
  }
}

void write_vs_cg_csv(const std::string& dir, const VsCgStudyResult& r) {
  std::ostringstream saga;
  write_trace_csv(saga, r.saga);
  write_text_atomic(csv_path(dir, "saga_vs_cg_saga.csv"), saga.str());
  std::ostringstream cgs;
  write_trace_csv(cgs, r.cg);
  write_text_atomic(csv_path(dir, "saga_vs_cg_cg.csv"), cgs.str());
}

void write_complexity_csv(const std::string& dir, const ComplexityStudyResult& r) {
  std::ostringstream os;
  os << "tol,q,m,k_max,err_at_kmax,k_fst,err_at_kfst,work,pde_solves\n";
  for (const auto& row : r.rows)
    os << fmt_row("%.6e,%d,%d,%ld,%.17g,%ld,%.17g,%.6e,%ld\n", row.tol, row.q, row.m, row.k_max,
                  row.err_at_kmax, row.k_fst, row.err_at_kfst, row.work, row.pde_solves);
  os << fmt_row("# model: e1=%.17g e2=%.17g s=%.17g e3=%.17g eps0=%.17g\n", r.model.e1,
                r.model.e2, r.model.s, r.model.e3, r.model.eps0);
  write_text_atomic(csv_path(dir, "complexity.csv"), os.str());
}

void write_manifest(const std::string& dir, const StudyConfig& cfg,
                    const std::vector<std::string>& outputs) {
  json j;
  const std::string config_text = cfg.to_json_text();
  j["config"] = json::parse(config_text);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(config_text)));
  j["config_hash"] = hash;
  j["git_revision"] = git_revision();
  j["master_seed"] = cfg.seed;
  j["outputs"] = outputs;
  write_text_atomic(csv_path(dir, "manifest.json"), j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Config JSON.

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

StudyConfig StudyConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  StudyConfig cfg;
  if (j.contains("instance")) {
    const auto& ji = j.at("instance");
    get_if(ji, "name", cfg.instance.name);
    get_if(ji, "beta", cfg.instance.beta);
    get_if(ji, "sigma", cfg.instance.sigma);
    get_if(ji, "dimension", cfg.instance.dimension);
  }
  get_if(j, "seed", cfg.seed);
  get_if(j, "threads", cfg.threads);
  get_if(j, "out_dir", cfg.out_dir);
  if (j.contains("quadrature")) {
    const auto& jq = j.at("quadrature");
    get_if(jq, "q_list", cfg.quadrature.q_list);
    get_if(jq, "q_ref", cfg.quadrature.q_ref);
    get_if(jq, "mesh_m", cfg.quadrature.mesh_m);
    get_if(jq, "cg_tol", cfg.quadrature.cg_tol);
  }
  if (j.contains("fe")) {
    const auto& jf = j.at("fe");
    get_if(jf, "m_list", cfg.fe.m_list);
    get_if(jf, "m_ref", cfg.fe.m_ref);
    get_if(jf, "q", cfg.fe.q);
    get_if(jf, "cg_tol", cfg.fe.cg_tol);
  }
  if (j.contains("saga_rate")) {
    const auto& jr = j.at("saga_rate");
    get_if(jr, "q_list", cfg.saga_rate.q_list);
    get_if(jr, "mesh_m", cfg.saga_rate.mesh_m);
    get_if(jr, "repetitions", cfg.saga_rate.repetitions);
    get_if(jr, "iterations", cfg.saga_rate.iterations);
    get_if(jr, "tau", cfg.saga_rate.tau);
    get_if(jr, "fit_lo", cfg.saga_rate.fit_lo);
    get_if(jr, "fit_hi", cfg.saga_rate.fit_hi);
    get_if(jr, "cg_tol", cfg.saga_rate.cg_tol);
  }
  if (j.contains("step_sensitivity")) {
    const auto& js = j.at("step_sensitivity");
    get_if(js, "taus", cfg.step_sensitivity.taus);
    get_if(js, "q", cfg.step_sensitivity.q);
    get_if(js, "mesh_m", cfg.step_sensitivity.mesh_m);
    get_if(js, "repetitions", cfg.step_sensitivity.repetitions);
    get_if(js, "iterations", cfg.step_sensitivity.iterations);
    get_if(js, "cg_tol", cfg.step_sensitivity.cg_tol);
  }
  if (j.contains("saga_vs_cg")) {
    const auto& jv = j.at("saga_vs_cg");
    get_if(jv, "q", cfg.saga_vs_cg.q);
    get_if(jv, "mesh_m", cfg.saga_vs_cg.mesh_m);
    get_if(jv, "budget_sweeps", cfg.saga_vs_cg.budget_sweeps);
    get_if(jv, "tau", cfg.saga_vs_cg.tau);
    get_if(jv, "cg_tol", cfg.saga_vs_cg.cg_tol);
  }
  if (j.contains("complexity")) {
    const auto& jc = j.at("complexity");
    get_if(jc, "tolerances", cfg.complexity.tolerances);
    get_if(jc, "tau", cfg.complexity.tau);
    get_if(jc, "gamma", cfg.complexity.gamma);
    get_if(jc, "ref_mesh_factor", cfg.complexity.ref_mesh_factor);
    get_if(jc, "ref_q_extra", cfg.complexity.ref_q_extra);
    get_if(jc, "cg_tol", cfg.complexity.cg_tol);
  }
  return cfg;
}

std::string StudyConfig::to_json_text() const {
  json j;
  j["instance"] = {{"name", instance.name},
                   {"beta", instance.beta},
                   {"sigma", instance.sigma},
                   {"dimension", instance.dimension}};
  j["seed"] = seed;
  j["threads"] = threads;
  j["out_dir"] = out_dir;
  j["quadrature"] = {{"q_list", quadrature.q_list},
                     {"q_ref", quadrature.q_ref},
                     {"mesh_m", quadrature.mesh_m},
                     {"cg_tol", quadrature.cg_tol}};
  j["fe"] = {{"m_list", fe.m_list}, {"m_ref", fe.m_ref}, {"q", fe.q}, {"cg_tol", fe.cg_tol}};
  j["saga_rate"] = {{"q_list", saga_rate.q_list},       {"mesh_m", saga_rate.mesh_m},
                    {"repetitions", saga_rate.repetitions}, {"iterations", saga_rate.iterations},
                    {"tau", saga_rate.tau},             {"fit_lo", saga_rate.fit_lo},
                    {"fit_hi", saga_rate.fit_hi},       {"cg_tol", saga_rate.cg_tol}};
  j["step_sensitivity"] = {{"taus", step_sensitivity.taus},
                           {"q", step_sensitivity.q},
                           {"mesh_m", step_sensitivity.mesh_m},
                           {"repetitions", step_sensitivity.repetitions},
                           {"iterations", step_sensitivity.iterations},
                           {"cg_tol", step_sensitivity.cg_tol}};
  j["saga_vs_cg"] = {{"q", saga_vs_cg.q},
                     {"mesh_m", saga_vs_cg.mesh_m},
                     {"budget_sweeps", saga_vs_cg.budget_sweeps},
                     {"tau", saga_vs_cg.tau},
                     {"cg_tol", saga_vs_cg.cg_tol}};
  j["complexity"] = {{"tolerances", complexity.tolerances},
                     {"tau", complexity.tau},
                     {"gamma", complexity.gamma},
                     {"ref_mesh_factor", complexity.ref_mesh_factor},
                     {"ref_q_extra", complexity.ref_q_extra},
                     {"cg_tol", complexity.cg_tol}};
  return j.dump(2);
}

}  // namespace pdeopt
