#include "pdeopt/optim.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pdeopt/summation.hpp"

namespace pdeopt {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

CgResult solve_cg(const DiscreteOcp& ocp, const CgConfig& cfg, std::optional<Eigen::VectorXd> u0,
                  const Eigen::VectorXd* u_ref) {
  if (!(cfg.tol_grad > 0.0)) throw std::invalid_argument("solve_cg: tol_grad must be positive");
  const auto& space = ocp.space();
  const auto t0 = Clock::now();
  const long n2 = 2 * static_cast<long>(ocp.n());
  long solves = 0;  // structural count: deterministic under concurrency

  CgResult res;
  res.u = u0 ? std::move(*u0) : ocp.zero_control();

  Eigen::VectorXd r = -ocp.full_gradient(res.u);
  solves += n2;
  double grad_norm = space.l2_norm(r);
  if (grad_norm <= cfg.tol_grad) {
    res.converged = true;
    res.grad_norm = grad_norm;
    return res;
  }

  Eigen::VectorXd p = r;
  double rr = space.l2_inner(r, r);
  const double beta_reg = ocp.beta();

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Eigen::VectorXd hp = ocp.hessian_apply(p);
    solves += n2;
    const double curv = space.l2_inner(p, hp);
    const double pp = space.l2_inner(p, p);
    if (!(curv > 0.0) || curv < 0.5 * beta_reg * pp) {
      std::ostringstream msg;
      msg << "solve_cg: curvature " << curv << " below the convexity floor " << beta_reg * pp;
      throw std::runtime_error(msg.str());
    }
    const double alpha = rr / curv;
    res.u += alpha * p;
    r -= alpha * hp;
    const double rr_next = space.l2_inner(r, r);

    double rec_norm = std::sqrt(std::max(0.0, rr_next));
    if (cfg.record_trace) {
      const double err = u_ref ? space.l2_norm(res.u - *u_ref) : rec_norm;
      res.trace.rows.push_back({k, err, std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN(), solves,
                                elapsed_ms(t0)});
    }
    res.iterations = k;

    if (rec_norm <= cfg.tol_grad) {
      // The recursive residual drifts near machine precision; certify the
      // stop against the true gradient and restart if it disagrees.
      r = -ocp.full_gradient(res.u);
      solves += n2;
      grad_norm = space.l2_norm(r);
      if (grad_norm <= cfg.tol_grad) {
        res.converged = true;
        res.grad_norm = grad_norm;
        return res;
      }
      p = r;
      rr = space.l2_inner(r, r);
      continue;
    }
    const double dir_beta = rr_next / rr;
    p = r + dir_beta * p;
    rr = rr_next;
  }
  res.grad_norm = space.l2_norm(ocp.full_gradient(res.u));
  res.converged = res.grad_norm <= cfg.tol_grad;
  return res;
}

SgResult run_sg_is(const DiscreteOcp& ocp, const SgConfig& cfg, const SamplingDistribution& dist,
                   const Eigen::VectorXd& u0, const Eigen::VectorXd* u_ref) {
  if (dist.size() != ocp.n()) throw std::invalid_argument("run_sg_is: distribution size mismatch");
  if (!(cfg.tau0 > 0.0)) throw std::invalid_argument("run_sg_is: tau0 must be positive");

  const auto& space = ocp.space();
  const auto t0 = Clock::now();
  const double guard = cfg.divergence_factor * (1.0 + space.l2_norm(u0));

  SgResult res;
  res.u = u0;
  res.trace.rows.reserve(cfg.k_max);
  Rng rng(cfg.seed);

  for (long k = 1; k <= cfg.k_max; ++k) {
    const double tau_k = cfg.tau0 / static_cast<double>(k);
    const std::size_t i = draw_index(dist, rng);
    const Eigen::VectorXd g = ocp.per_sample_gradient(res.u, i);
    res.u -= tau_k * (ocp.rule().weight(i) / dist.prob(i)) * g;

    TraceRow row;
    row.k = k;
    if (u_ref) row.err_l2 = space.l2_norm(res.u - *u_ref);
    row.pde_solves = 2 * k;
    row.wall_ms = elapsed_ms(t0);
    res.trace.rows.push_back(row);

    if (space.l2_norm(res.u) > guard) {
      res.diverged = res.trace.diverged = true;
      res.trace.diverged_at = k;
      break;
    }
  }
  return res;
}

namespace {

SagaResult saga_loop(const DiscreteOcp& ocp, const SagaConfig& cfg,
                     const SamplingDistribution& dist, SagaState state, long iters,
                     const Eigen::VectorXd* u_ref, long solves_base) {
  const auto& space = ocp.space();
  const auto& rule = ocp.rule();
  const auto t0 = Clock::now();
  long solves = solves_base;
  const double guard = cfg.divergence_factor * (1.0 + space.l2_norm(state.u));

  SagaResult res;
  res.trace.rows.reserve(iters);
  Rng rng(0);
  rng.set_state(state.rng_state);

  const long k_end = state.k + iters;
  while (state.k < k_end) {
    const std::size_t i = draw_index(dist, rng);
    const Eigen::VectorXd g_new = ocp.per_sample_gradient(state.u, i);
    solves += 2;
    const double reweight = rule.weight(i) / dist.prob(i);
    const Eigen::VectorXd u_prev = state.u;

    state.u -= state.tau * ((g_new - state.grads[i]) * reweight + state.grad_sum);
    state.grad_sum += rule.weight(i) * (g_new - state.grads[i]);
    state.grads[i] = g_new;
    if (cfg.diagnostics) state.phis[i] = u_prev;
    ++state.k;

    TraceRow row;
    row.k = state.k;
    if (u_ref)
      row.err_l2 = space.l2_norm(state.u - *u_ref);
    else if (cfg.error_metric)
      row.err_l2 = cfg.error_metric(state.u);
    if (cfg.objective_every > 0 && state.k % cfg.objective_every == 0)
      row.objective = ocp.objective(state.u);
    if (cfg.qk_metric) row.qk = cfg.qk_metric(state);
    row.pde_solves = solves;
    row.wall_ms = elapsed_ms(t0);
    res.trace.rows.push_back(row);

    if (space.l2_norm(state.u) > guard) {
      res.diverged = res.trace.diverged = true;
      res.trace.diverged_at = state.k;
      break;
    }
  }

  state.rng_state = rng.state();
  res.state = std::move(state);
  return res;
}

}  // namespace

SagaResult run_saga_is(const DiscreteOcp& ocp, const SagaConfig& cfg,
                       const SamplingDistribution& dist, const Eigen::VectorXd& u0,
                       const Eigen::VectorXd* u_ref) {
  if (dist.size() != ocp.n())
    throw std::invalid_argument("run_saga_is: distribution size mismatch");
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("run_saga_is: tau must be positive");

  SagaState state;
  state.u = u0;
  state.tau = cfg.tau;
  state.k = 0;
  state.rng_state = Rng(cfg.seed).state();
  state.grads.assign(ocp.n(), Eigen::VectorXd::Zero(ocp.space().dof_count()));
  state.grad_sum = Eigen::VectorXd::Zero(ocp.space().dof_count());
  if (cfg.diagnostics) state.phis.assign(ocp.n(), u0);

  long init_solves = 0;
  if (cfg.init == SagaInit::FullSweep) {
    CompensatedVectorSum acc(ocp.space().dof_count());
    for (std::size_t j = 0; j < ocp.n(); ++j) {
      state.grads[j] = ocp.per_sample_gradient(u0, j);
      acc.add(ocp.rule().weight(j), state.grads[j]);
    }
    state.grad_sum = acc.value();
    init_solves = 2 * static_cast<long>(ocp.n());
  }
  return saga_loop(ocp, cfg, dist, std::move(state), cfg.k_max, u_ref, init_solves);
}

SagaResult resume_saga_is(const DiscreteOcp& ocp, const SagaConfig& cfg,
                          const SamplingDistribution& dist, SagaState state, long extra_iters,
                          const Eigen::VectorXd* u_ref) {
  if (state.grads.size() != ocp.n())
    throw std::invalid_argument("resume_saga_is: state does not match the problem");
  return saga_loop(ocp, cfg, dist, std::move(state), extra_iters, u_ref, 0);
}

double q_k_diagnostic(const DiscreteOcp& ocp, const SagaState& state,
                      const SamplingDistribution& dist,
                      const std::vector<Eigen::VectorXd>& grads_at_opt) {
  if (grads_at_opt.size() != ocp.n() || state.grads.size() != ocp.n())
    throw std::invalid_argument("q_k_diagnostic: size mismatch");
  const auto& space = ocp.space();
  NeumaierSum acc;
  for (std::size_t j = 0; j < ocp.n(); ++j) {
    const double w = ocp.rule().weight(j);
    const Eigen::VectorXd diff = state.grads[j] - grads_at_opt[j];
    acc.add(w * w / dist.prob(j) * space.l2_inner(diff, diff));
  }
  return acc.value();
}

Eigen::VectorXd recompute_memory_sum(const DiscreteOcp& ocp, const SagaState& state) {
  if (state.phis.size() != ocp.n())
    throw std::invalid_argument("recompute_memory_sum: diagnostics mode required");
  CompensatedVectorSum acc(ocp.space().dof_count());
  for (std::size_t j = 0; j < ocp.n(); ++j)
    acc.add(ocp.rule().weight(j), ocp.per_sample_gradient(state.phis[j], j));
  return acc.value();
}

StepAndRate theoretical_step_and_rate(double l, double L, double s_tilde, std::size_t n) {
  if (!(l > 0.0) || !(L > 0.0) || !(s_tilde > 0.0) || n == 0)
    throw std::invalid_argument("theoretical_step_and_rate: constants must be positive");
  StepAndRate out;
  out.tau1 = l / (25.0 * s_tilde * L * L);
  out.tau = 0.5 * out.tau1;
  out.epsilon = std::min(l * l / (100.0 * s_tilde * L * L), 1.0 / (2.0 * static_cast<double>(n)));
  out.alpha = 16.0 * static_cast<double>(n) * out.tau * out.tau;
  return out;
}

namespace {

// Mean over traces of err at each common iteration index.
std::vector<double> mean_err(const std::vector<IterTrace>& traces, std::vector<long>* ks) {
  if (traces.empty()) throw std::invalid_argument("rate fit: no traces");
  std::size_t rows = traces.front().rows.size();
  for (const auto& t : traces) rows = std::min(rows, t.rows.size());
  std::vector<double> mean(rows, 0.0);
  if (ks) ks->resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    NeumaierSum acc;
    for (const auto& t : traces) {
      const double e = t.rows[r].err_l2;
      if (!std::isfinite(e)) throw std::invalid_argument("rate fit: trace lacks err values");
      acc.add(e);
    }
    mean[r] = acc.value() / static_cast<double>(traces.size());
    if (ks) (*ks)[r] = traces.front().rows[r].k;
  }
  return mean;
}

struct LineFit {
  double slope, intercept, r2;
  std::size_t points;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double nd = static_cast<double>(n);
  const double den = nd * sxx - sx * sx;
  LineFit f{};
  f.points = n;
  f.slope = (nd * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / nd;
  const double ss_tot = syy - sy * sy / nd;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += e * e;
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace

RateFit fit_exponential_rate(const std::vector<IterTrace>& traces, double lo_frac,
                             double hi_frac) {
  std::vector<long> ks;
  const std::vector<double> mean = mean_err(traces, &ks);
  const std::size_t lo = static_cast<std::size_t>(lo_frac * mean.size());
  const std::size_t hi = std::min(mean.size(), static_cast<std::size_t>(hi_frac * mean.size()));
  if (hi < lo + 10) throw std::invalid_argument("fit_exponential_rate: window has < 10 points");

  std::vector<double> xs, ys;
  xs.reserve(hi - lo);
  ys.reserve(hi - lo);
  for (std::size_t r = lo; r < hi; ++r) {
    if (!(mean[r] > 0.0)) continue;
    xs.push_back(static_cast<double>(ks[r]));
    ys.push_back(std::log10(mean[r]));
  }
  if (xs.size() < 10) throw std::invalid_argument("fit_exponential_rate: window has < 10 points");
  const LineFit f = least_squares(xs, ys);
  RateFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  out.points = f.points;
  out.eps_est = 1.0 - std::pow(10.0, f.slope);
  out.e1 = std::pow(10.0, f.intercept);
  return out;
}

RateFit fit_power_law(const std::vector<IterTrace>& traces, long k_lo, long k_hi) {
  std::vector<long> ks;
  const std::vector<double> mean = mean_err(traces, &ks);
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < mean.size(); ++r) {
    if (ks[r] < k_lo || ks[r] > k_hi || !(mean[r] > 0.0)) continue;
    xs.push_back(std::log10(static_cast<double>(ks[r])));
    ys.push_back(std::log10(mean[r] * mean[r]));  // squared error
  }
  if (xs.size() < 10) throw std::invalid_argument("fit_power_law: window has < 10 points");
  const LineFit f = least_squares(xs, ys);
  RateFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  out.points = f.points;
  return out;
}

}  // namespace pdeopt
