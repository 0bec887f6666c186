// Command-line harness: single solver runs plus the benchmark studies.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "pdeopt/checkpoint.hpp"
#include "pdeopt/ocp.hpp"
#include "pdeopt/optim.hpp"
#include "pdeopt/studies.hpp"

using namespace pdeopt;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

StudyConfig load_config(const GlobalOpts& g) {
  StudyConfig cfg;
  if (!g.config_path.empty()) {
    std::ifstream is(g.config_path);
    if (!is) throw std::runtime_error("cannot open config " + g.config_path);
    std::stringstream buf;
    buf << is.rdbuf();
    cfg = StudyConfig::from_json_text(buf.str());
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  if (g.threads) cfg.threads = *g.threads;
  return cfg;
}

DiscreteOcp build_ocp(const StudyConfig& cfg, int mesh_m, int q) {
  auto inst = make_instance(cfg.instance);
  auto space = std::make_shared<DiscreteSpace>(build_mesh(mesh_m, inst->boundary()));
  return DiscreteOcp(inst, space,
                     QuadratureRule::tensor_gauss_legendre(q, inst->parameter_box()));
}

SamplingDistribution make_sampling(const DiscreteOcp& ocp, const std::string& kind) {
  if (kind == "uniform") return SamplingDistribution::uniform(ocp.n());
  if (kind == "weights") {
    std::vector<double> w(ocp.rule().weights().begin(), ocp.rule().weights().end());
    return SamplingDistribution::from_weights(w);
  }
  throw std::runtime_error("unknown sampling '" + kind + "' (use uniform|weights)");
}

void write_outputs(const StudyConfig& cfg, const std::string& trace_name,
                   const IterTrace& trace, const DiscreteSpace& space,
                   const Eigen::VectorXd& u, const std::string& field_name) {
  std::filesystem::create_directories(cfg.out_dir);
  const auto dir = std::filesystem::path(cfg.out_dir);
  {
    std::ofstream os(dir / trace_name);
    write_trace_csv(os, trace);
  }
  {
    std::ofstream os(dir / (field_name + ".csv"));
    write_field_csv(os, space, u);
  }
  save_field((dir / (field_name + ".bin")).string(), space, u);
  write_manifest(cfg.out_dir, cfg, {trace_name, field_name + ".csv", field_name + ".bin"});
}

std::optional<Eigen::VectorXd> reference_control(const DiscreteOcp& ocp, bool wanted,
                                                 double tol) {
  if (!wanted) return std::nullopt;
  CgConfig cg;
  cg.tol_grad = tol;
  cg.max_iter = 400;
  auto res = solve_cg(ocp, cg);
  std::printf("reference CG: %d iterations, |grad| = %.3e\n", res.iterations, res.grad_norm);
  return std::move(res.u);
}

CalibratedModel model_from_config_or_calibrate(const StudyConfig& cfg,
                                               const std::string& config_path) {
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    std::stringstream buf;
    buf << is.rdbuf();
    const auto j = nlohmann::json::parse(buf.str());
    if (j.contains("model")) {
      const auto& jm = j.at("model");
      CalibratedModel m;
      if (jm.contains("e1")) m.e1 = jm.at("e1").get<double>();
      if (jm.contains("e2")) m.e2 = jm.at("e2").get<double>();
      if (jm.contains("s")) m.s = jm.at("s").get<double>();
      if (jm.contains("e3")) m.e3 = jm.at("e3").get<double>();
      if (jm.contains("eps0")) m.eps0 = jm.at("eps0").get<double>();
      return m;
    }
  }
  std::printf("calibrating the error model (quadrature, FE and rate studies)...\n");
  return calibrate_model(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-averse PDE-constrained optimal control: CG / SG / SAGA solvers "
               "and benchmark studies on the contaminant-transport example"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "master seed (overrides config)");
  app.add_option("--out", g.out_dir, "output directory (overrides config)");
  app.add_option("--threads", g.threads, "worker threads for ensemble studies");

  int mesh_m = 8, q = 2;
  double cg_tol = 1e-12;
  int cg_max_iter = 400;
  auto* cg_cmd = app.add_subcommand("solve-cg", "conjugate gradient on the reduced system");
  cg_cmd->add_option("--mesh-m", mesh_m, "subdivisions per side");
  cg_cmd->add_option("--q", q, "Gauss-Legendre points per parameter");
  cg_cmd->add_option("--tol", cg_tol, "gradient-norm stopping tolerance");
  cg_cmd->add_option("--max-iter", cg_max_iter, "iteration cap");

  double sg_tau0 = 40.0;
  long sg_iters = 10000;
  std::string sg_sampling = "uniform";
  bool sg_reference = true;
  auto* sg_cmd = app.add_subcommand("run-sg", "stochastic gradient with importance sampling");
  sg_cmd->add_option("--mesh-m", mesh_m, "subdivisions per side");
  sg_cmd->add_option("--q", q, "Gauss-Legendre points per parameter");
  sg_cmd->add_option("--tau0", sg_tau0, "step schedule tau0/k");
  sg_cmd->add_option("--iterations", sg_iters, "iteration count");
  sg_cmd->add_option("--sampling", sg_sampling, "uniform|weights");
  sg_cmd->add_flag("--reference,!--no-reference", sg_reference,
                   "record errors against a CG reference");

  double saga_tau = 4.0;
  long saga_iters = 5000;
  std::string saga_sampling = "uniform", saga_init = "full-sweep";
  std::string saga_checkpoint, saga_resume;
  bool saga_reference = true;
  auto* saga_cmd = app.add_subcommand("run-saga", "SAGA with importance sampling");
  saga_cmd->add_option("--mesh-m", mesh_m, "subdivisions per side");
  saga_cmd->add_option("--q", q, "Gauss-Legendre points per parameter");
  saga_cmd->add_option("--tau", saga_tau, "fixed step size");
  saga_cmd->add_option("--iterations", saga_iters, "iteration count");
  saga_cmd->add_option("--sampling", saga_sampling, "uniform|weights");
  saga_cmd->add_option("--init", saga_init, "memory start: full-sweep|zero");
  saga_cmd->add_option("--checkpoint", saga_checkpoint, "write the final state here");
  saga_cmd->add_option("--resume", saga_resume, "continue from a saved state");
  saga_cmd->add_flag("--reference,!--no-reference", saga_reference,
                     "record errors against a CG reference");

  std::string study_name;
  auto* study_cmd = app.add_subcommand("study", "benchmark studies");
  study_cmd->add_option("name", study_name,
                        "quadrature|fe|saga-rate|step-sensitivity|saga-vs-cg|complexity")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const StudyConfig cfg = load_config(g);
    std::filesystem::create_directories(cfg.out_dir);

    if (cg_cmd->parsed()) {
      const DiscreteOcp ocp = build_ocp(cfg, mesh_m, q);
      CgConfig c;
      c.tol_grad = cg_tol;
      c.max_iter = cg_max_iter;
      const CgResult res = solve_cg(ocp, c);
      std::printf("CG: %s in %d iterations, |grad| = %.3e, %ld PDE solves\n",
                  res.converged ? "converged" : "stopped", res.iterations, res.grad_norm,
                  ocp.pde_solve_count());
      write_outputs(cfg, "cg_trace.csv", res.trace, ocp.space(), res.u, "u_cg");
      return res.converged ? 0 : 2;
    }

    if (sg_cmd->parsed()) {
      const DiscreteOcp ocp = build_ocp(cfg, mesh_m, q);
      const auto dist = make_sampling(ocp, sg_sampling);
      const auto u_ref = reference_control(ocp, sg_reference, cg_tol);
      SgConfig c;
      c.tau0 = sg_tau0;
      c.k_max = sg_iters;
      c.seed = cfg.seed;
      const SgResult res =
          run_sg_is(ocp, c, dist, ocp.zero_control(), u_ref ? &*u_ref : nullptr);
      std::printf("SG: %s after %zu iterations\n", res.diverged ? "diverged" : "finished",
                  res.trace.rows.size());
      write_outputs(cfg, "sg_trace.csv", res.trace, ocp.space(), res.u, "u_sg");
      return res.diverged ? 3 : 0;
    }

    if (saga_cmd->parsed()) {
      const DiscreteOcp ocp = build_ocp(cfg, mesh_m, q);
      const auto dist = make_sampling(ocp, saga_sampling);
      const auto u_ref = reference_control(ocp, saga_reference, cg_tol);
      SagaConfig c;
      c.tau = saga_tau;
      c.k_max = saga_iters;
      c.seed = cfg.seed;
      c.init = saga_init == "zero" ? SagaInit::Zero : SagaInit::FullSweep;
      SagaResult res;
      if (!saga_resume.empty()) {
        SagaState state = load_saga_state(saga_resume, ocp);
        res = resume_saga_is(ocp, c, dist, std::move(state), saga_iters,
                             u_ref ? &*u_ref : nullptr);
      } else {
        res = run_saga_is(ocp, c, dist, ocp.zero_control(), u_ref ? &*u_ref : nullptr);
      }
      std::printf("SAGA: %s at k = %ld\n", res.diverged ? "diverged" : "finished",
                  res.state.k);
      if (!saga_checkpoint.empty()) save_saga_state(saga_checkpoint, ocp, res.state);
      write_outputs(cfg, "saga_trace.csv", res.trace, ocp.space(), res.state.u, "u_saga");
      return res.diverged ? 3 : 0;
    }

    // studies
    std::vector<std::string> outputs;
    if (study_name == "quadrature") {
      write_quad_csv(cfg.out_dir, run_quadrature_study(cfg));
      outputs = {"quadrature_error.csv"};
    } else if (study_name == "fe") {
      write_fe_csv(cfg.out_dir, run_fe_study(cfg));
      outputs = {"fe_error.csv"};
    } else if (study_name == "saga-rate") {
      write_rate_csv(cfg.out_dir, run_saga_rate_study(cfg));
      outputs = {"saga_rate.csv"};
    } else if (study_name == "step-sensitivity") {
      write_step_csv(cfg.out_dir, run_step_sensitivity_study(cfg));
      outputs = {"step_sensitivity.csv"};
    } else if (study_name == "saga-vs-cg") {
      write_vs_cg_csv(cfg.out_dir, run_saga_vs_cg_study(cfg));
      outputs = {"saga_vs_cg_saga.csv", "saga_vs_cg_cg.csv"};
    } else if (study_name == "complexity") {
      const CalibratedModel model = model_from_config_or_calibrate(cfg, g.config_path);
      write_complexity_csv(cfg.out_dir, run_complexity_study(cfg, model));
      outputs = {"complexity.csv"};
    } else {
      std::fprintf(stderr, "unknown study '%s'\n", study_name.c_str());
      return 64;
    }
    write_manifest(cfg.out_dir, cfg, outputs);
    std::printf("study '%s' written to %s\n", study_name.c_str(), cfg.out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
