#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "pdeopt/ocp.hpp"
#include "pdeopt/quadrature.hpp"
#include "pdeopt/rng.hpp"
#include "pdeopt/trace.hpp"

namespace pdeopt {

// ---------------------------------------------------------------------------
// Conjugate gradient on the reduced quadratic system H u = -grad(0).

struct CgConfig {
  double tol_grad = 1e-12;  // stop when ||grad J(u_k)|| (L2) <= tol_grad
  int max_iter = 200;
  bool record_trace = true;
};

struct CgResult {
  Eigen::VectorXd u;
  IterTrace trace;  // err column holds the residual norm history
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Reduced-Hessian CG in the L2 inner product. Each iteration costs 2n PDE
// solves; stopping is certified against the true gradient, not the recursive
// residual. Throws on nonpositive curvature (an assembly bug). When u_ref is
// given the trace err column holds ||u_k - u_ref||, otherwise the recursive
// residual norm.
CgResult solve_cg(const DiscreteOcp& ocp, const CgConfig& cfg,
                  std::optional<Eigen::VectorXd> u0 = std::nullopt,
                  const Eigen::VectorXd* u_ref = nullptr);

// ---------------------------------------------------------------------------
// Stochastic gradient with importance sampling, Robbins-Monro steps.

struct SgConfig {
  double tau0 = 40.0;  // tau_k = tau0 / k, k starting at 1
  long k_max = 10000;
  std::uint64_t seed = 1;
  double divergence_factor = 1e6;  // abort when ||u_k|| > factor*(1+||u0||)
};

struct SgResult {
  Eigen::VectorXd u;
  IterTrace trace;
  bool diverged = false;
};

SgResult run_sg_is(const DiscreteOcp& ocp, const SgConfig& cfg, const SamplingDistribution& dist,
                   const Eigen::VectorXd& u0, const Eigen::VectorXd* u_ref = nullptr);

// ---------------------------------------------------------------------------
// SAGA with importance sampling.

enum class SagaInit {
  FullSweep,  // memory starts at the per-sample gradients of u0 (n extra sweeps)
  Zero,       // memory and running sum start at zero
};

struct SagaState;

struct SagaConfig {
  double tau = 4.0;
  long k_max = 5000;
  std::uint64_t seed = 1;
  SagaInit init = SagaInit::FullSweep;
  bool diagnostics = false;        // retain memory controls phi_j for oracles
  double divergence_factor = 1e6;
  long objective_every = 0;        // record J(u_k) every this many iterations (0: never)
  // Custom error recorded in the trace when no u_ref is given (e.g. the
  // distance to a reference living on a finer mesh).
  std::function<double(const Eigen::VectorXd&)> error_metric;
  // Optional per-iteration diagnostic recorded in the qk column, evaluated
  // on the post-update state.
  std::function<double(const SagaState&)> qk_metric;
};

// Memory state of a SAGA run: iterate, stored per-node gradients, their
// weighted running sum, iteration counter and generator state. The running
// sum is maintained incrementally and equals sum_j w_j grads[j] up to
// accumulation roundoff at every iteration.
struct SagaState {
  Eigen::VectorXd u;
  std::vector<Eigen::VectorXd> grads;
  Eigen::VectorXd grad_sum;
  std::vector<Eigen::VectorXd> phis;  // only in diagnostics mode
  long k = 0;
  double tau = 0.0;
  std::uint64_t rng_state = 0;
};

struct SagaResult {
  SagaState state;
  IterTrace trace;
  bool diverged = false;
};

SagaResult run_saga_is(const DiscreteOcp& ocp, const SagaConfig& cfg,
                       const SamplingDistribution& dist, const Eigen::VectorXd& u0,
                       const Eigen::VectorXd* u_ref = nullptr);

// Continues a checkpointed run for `extra_iters` iterations.
SagaResult resume_saga_is(const DiscreteOcp& ocp, const SagaConfig& cfg,
                          const SamplingDistribution& dist, SagaState state, long extra_iters,
                          const Eigen::VectorXd* u_ref = nullptr);

// Weighted squared distance of the stored memory gradients from the optimal
// per-sample gradients: sum_j w_j^2 / p_j ||grads_j - grad_j(u*)||^2.
double q_k_diagnostic(const DiscreteOcp& ocp, const SagaState& state,
                      const SamplingDistribution& dist,
                      const std::vector<Eigen::VectorXd>& grads_at_opt);

// Recomputes sum_j w_j grad_j(phi_j) from the stored memory controls
// (diagnostics mode only) for consistency checks against grad_sum.
Eigen::VectorXd recompute_memory_sum(const DiscreteOcp& ocp, const SagaState& state);

// ---------------------------------------------------------------------------
// Theory constants and empirical rate fits.

struct StepAndRate {
  double tau1;      // stability threshold l / (25 S~ L^2)
  double tau;       // recommended tau1 / 2
  double epsilon;   // min(l^2/(100 S~ L^2), 1/(2n))
  double alpha;     // Lyapunov coupling 16 n tau^2
};

StepAndRate theoretical_step_and_rate(double l, double L, double s_tilde, std::size_t n);

struct RateFit {
  double e1 = 0.0;       // 10^intercept of the log10 fit
  double eps_est = 0.0;  // 1 - 10^slope
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

// Least-squares fit of log10(mean over traces of err) against k on the
// window [lo_frac, hi_frac] of recorded iterations. Requires u_ref-bearing
// traces and at least 10 window points.
RateFit fit_exponential_rate(const std::vector<IterTrace>& traces, double lo_frac = 0.25,
                             double hi_frac = 1.0);

// Least-squares slope of log10(mean squared err) against log10 k over
// k in [k_lo, k_hi]; used for the Robbins-Monro rate check.
RateFit fit_power_law(const std::vector<IterTrace>& traces, long k_lo, long k_hi);

}  // namespace pdeopt
