#include "pdeopt/ocp.hpp"

#include <cmath>
#include <stdexcept>

#include "pdeopt/rng.hpp"
#include "pdeopt/summation.hpp"

namespace pdeopt {

struct DiscreteOcp::Node {
  OperatorMatrix op;
  Eigen::VectorXd mf;  // M * (nodal source)
};

DiscreteOcp::DiscreteOcp(std::shared_ptr<const ProblemInstance> instance,
                         std::shared_ptr<const DiscreteSpace> space, QuadratureRule rule,
                         OcpOptions options)
    : instance_(std::move(instance)),
      space_(std::move(space)),
      rule_(std::move(rule)),
      options_(options) {
  if (rule_.box() != instance_->parameter_box())
    throw std::invalid_argument("DiscreteOcp: rule box differs from instance box");
  if (space_->mesh().bc != instance_->boundary())
    throw std::invalid_argument("DiscreteOcp: space boundary kind differs from instance");
  for (std::size_t j = 0; j < rule_.size(); ++j)
    if (!(rule_.weight(j) > 0.0))
      throw std::invalid_argument("DiscreteOcp: quadrature weights must be positive");

  zd_ = instance_->target() ? space_->interpolate(instance_->target())
                            : Eigen::VectorXd::Zero(space_->dof_count());
  mzd_ = space_->mass() * zd_;
  nodes_.resize(rule_.size());
}

std::shared_ptr<const DiscreteOcp::Node> DiscreteOcp::node(std::size_t j) const {
  if (j >= rule_.size()) throw std::out_of_range("DiscreteOcp: node index");
  {
    std::lock_guard<std::mutex> lock(nodes_mutex_);
    if (nodes_[j]) return nodes_[j];
  }
  const auto bundle = instance_->sample_coefficients(rule_.node(j));
  auto nd = std::make_shared<Node>(Node{assemble_operator(*space_, bundle.coeffs),
                                        space_->mass() * space_->interpolate(bundle.source)});
  std::lock_guard<std::mutex> lock(nodes_mutex_);
  if (nodes_[j]) return nodes_[j];
  // Admit into the cache only while the factor budget allows; an uncached
  // node is rebuilt deterministically on the next visit.
  const std::size_t approx = 48 * static_cast<std::size_t>(nd->op.matrix().nonZeros());
  if (cached_bytes_.load() + approx <= options_.factor_cache_bytes) {
    cached_bytes_ += approx;
    nodes_[j] = nd;
  }
  return nd;
}

Eigen::VectorXd DiscreteOcp::state_solve(const Node& nd, const Eigen::VectorXd* u) const {
  Eigen::VectorXd rhs = nd.mf;
  if (u) rhs += instance_->sigma_b() * (space_->mass() * (*u));
  ++solves_;
  return nd.op.solve(rhs);
}

double DiscreteOcp::per_sample_loss(const Eigen::VectorXd& u, std::size_t j) const {
  const auto nd = node(j);
  const Eigen::VectorXd y = state_solve(*nd, &u);
  const Eigen::VectorXd misfit = y - zd_;
  return 0.5 * space_->l2_inner(misfit, misfit) + 0.5 * beta() * space_->l2_inner(u, u);
}

Eigen::VectorXd DiscreteOcp::per_sample_gradient(const Eigen::VectorXd& u, std::size_t j) const {
  const auto nd = node(j);
  const Eigen::VectorXd y = state_solve(*nd, &u);
  ++solves_;
  const Eigen::VectorXd p = nd->op.solve_adjoint(space_->mass() * y - mzd_);
  return beta() * u + instance_->sigma_b() * p;
}

double DiscreteOcp::objective(const Eigen::VectorXd& u) const {
  NeumaierSum acc;
  for (std::size_t j = 0; j < n(); ++j) acc.add(rule_.weight(j) * per_sample_loss(u, j));
  return acc.value();
}

Eigen::VectorXd DiscreteOcp::full_gradient(const Eigen::VectorXd& u) const {
  CompensatedVectorSum acc(space_->dof_count());
  for (std::size_t j = 0; j < n(); ++j) acc.add(rule_.weight(j), per_sample_gradient(u, j));
  return acc.value();
}

Eigen::VectorXd DiscreteOcp::hessian_apply(const Eigen::VectorXd& v) const {
  // Per sample: linearized state dy = sigma_b A^{-1} M v, then adjoint of the
  // misfit response; the signs square away, leaving A^{-T} M A^{-1} M v.
  CompensatedVectorSum acc(space_->dof_count());
  const Eigen::VectorXd mv = space_->mass() * v;
  for (std::size_t j = 0; j < n(); ++j) {
    const auto nd = node(j);
    ++solves_;
    const Eigen::VectorXd dy = nd->op.solve(mv);
    ++solves_;
    const Eigen::VectorXd dp = nd->op.solve_adjoint(space_->mass() * dy);
    acc.add(rule_.weight(j), dp);
  }
  return beta() * v + acc.value();
}

GradientValidation validate_gradient(const DiscreteOcp& ocp, int trials, std::uint64_t seed,
                                     double fd_step, double tol) {
  if (trials < 1) throw std::invalid_argument("validate_gradient: need trials >= 1");
  Rng rng(seed);
  const int n_dof = ocp.space().dof_count();
  GradientValidation out;

  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd u(n_dof), du(n_dof);
    for (int i = 0; i < n_dof; ++i) u[i] = 2.0 * rng.next_double() - 1.0;
    for (int i = 0; i < n_dof; ++i) du[i] = 2.0 * rng.next_double() - 1.0;
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % ocp.n());

    const double fd = (ocp.per_sample_loss(u + fd_step * du, j) -
                       ocp.per_sample_loss(u - fd_step * du, j)) /
                      (2.0 * fd_step);
    const Eigen::VectorXd g = ocp.per_sample_gradient(u, j);
    const double directional = ocp.space().l2_inner(g, du);
    // Flipping sigma_b flips the adjoint part of the gradient.
    const Eigen::VectorXd adj_part = g - ocp.beta() * u;
    const double directional_flipped = ocp.space().l2_inner(ocp.beta() * u - adj_part, du);

    const double scale = std::max({std::abs(fd), std::abs(directional), 1e-14});
    const double err = std::abs(directional - fd) / scale;
    const double err_flipped = std::abs(directional_flipped - fd) / scale;
    if (err > out.max_rel_err) {
      out.max_rel_err = err;
      out.worst_node = j;
    }
    out.max_rel_err_flipped = std::max(out.max_rel_err_flipped, err_flipped);
  }

  out.passed = out.max_rel_err <= tol;
  if (out.passed)
    out.passing_sigma_b = ocp.instance().sigma_b();
  else if (out.max_rel_err_flipped <= tol)
    out.passing_sigma_b = -ocp.instance().sigma_b();
  return out;
}

double estimate_lipschitz(const DiscreteOcp& ocp, int power_iters, std::uint64_t seed) {
  Rng rng(seed);
  const auto& space = ocp.space();
  const int n_dof = space.dof_count();
  const Eigen::VectorXd zero = ocp.zero_control();
  double worst = 0.0;
  for (std::size_t j = 0; j < ocp.n(); ++j) {
    const Eigen::VectorXd g0 = ocp.per_sample_gradient(zero, j);
    Eigen::VectorXd v(n_dof);
    for (int i = 0; i < n_dof; ++i) v[i] = 2.0 * rng.next_double() - 1.0;
    v /= space.l2_norm(v);
    double lambda = 0.0;
    for (int it = 0; it < power_iters; ++it) {
      const Eigen::VectorXd hv = ocp.per_sample_gradient(v, j) - g0;
      lambda = space.l2_norm(hv);
      if (!(lambda > 0.0)) break;
      v = hv / lambda;
    }
    worst = std::max(worst, lambda);
  }
  return worst;
}

}  // namespace pdeopt
