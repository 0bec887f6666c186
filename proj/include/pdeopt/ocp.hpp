#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "pdeopt/fem.hpp"
#include "pdeopt/problems.hpp"
#include "pdeopt/quadrature.hpp"

namespace pdeopt {

struct OcpOptions {
  // Operator factorizations are cached per quadrature node up to this
  // budget, after which nodes are re-assembled on demand. Correctness never
  // depends on a cache hit.
  std::size_t factor_cache_bytes = std::size_t(1) << 31;
};

// Fully discrete optimal control problem: one problem instance, one P1
// space, one quadrature rule. Exposes the weighted finite-sum objective
//   J(u) = sum_j w_j f_j(u),  f_j(u) = 1/2 ||y_j(u) - z_d||^2 + beta/2 ||u||^2
// with adjoint-based per-sample gradients. Weighted sums over nodes run in
// ascending node order through compensated accumulation, so the full
// gradient equals the generic weighted sum of per-sample gradients exactly.
class DiscreteOcp {
 public:
  DiscreteOcp(std::shared_ptr<const ProblemInstance> instance,
              std::shared_ptr<const DiscreteSpace> space, QuadratureRule rule,
              OcpOptions options = {});

  std::size_t n() const { return rule_.size(); }
  const QuadratureRule& rule() const { return rule_; }
  const DiscreteSpace& space() const { return *space_; }
  std::shared_ptr<const DiscreteSpace> space_ptr() const { return space_; }
  const ProblemInstance& instance() const { return *instance_; }
  double beta() const { return instance_->beta(); }
  const Eigen::VectorXd& target() const { return zd_; }

  Eigen::VectorXd zero_control() const { return Eigen::VectorXd::Zero(space_->dof_count()); }

  // One state solve.
  double per_sample_loss(const Eigen::VectorXd& u, std::size_t j) const;
  // One state solve plus one adjoint solve; returns beta*u + sigma_b*p_j(u)
  // with the adjoint extended by its essential zeros.
  Eigen::VectorXd per_sample_gradient(const Eigen::VectorXd& u, std::size_t j) const;

  double objective(const Eigen::VectorXd& u) const;
  Eigen::VectorXd full_gradient(const Eigen::VectorXd& u) const;

  // Action of the (constant) reduced Hessian: beta*v plus the weighted sum
  // of linearized state/adjoint round trips; equals grad(v) - grad(0).
  Eigen::VectorXd hessian_apply(const Eigen::VectorXd& v) const;

  long pde_solve_count() const { return solves_.load(); }

 private:
  struct Node;
  std::shared_ptr<const Node> node(std::size_t j) const;
  Eigen::VectorXd state_solve(const Node& nd, const Eigen::VectorXd* u) const;

  std::shared_ptr<const ProblemInstance> instance_;
  std::shared_ptr<const DiscreteSpace> space_;
  QuadratureRule rule_;
  OcpOptions options_;
  Eigen::VectorXd zd_;    // nodal target
  Eigen::VectorXd mzd_;   // M * z_d
  mutable std::vector<std::shared_ptr<const Node>> nodes_;
  mutable std::mutex nodes_mutex_;
  mutable std::atomic<std::size_t> cached_bytes_{0};
  mutable std::atomic<long> solves_{0};
};

struct GradientValidation {
  double max_rel_err = 0.0;          // with the instance's sigma_b
  double max_rel_err_flipped = 0.0;  // with the opposite sign
  double passing_sigma_b = 0.0;      // sign that meets the tolerance, 0 if none
  bool passed = false;
  std::size_t worst_node = 0;
};

// Central-difference directional-derivative checks on random (u, du, j)
// triples; fails when the relative error with the instance's sign exceeds
// `tol`. Also reports which sign convention the checks support.
GradientValidation validate_gradient(const DiscreteOcp& ocp, int trials, std::uint64_t seed,
                                     double fd_step = 1e-5, double tol = 1e-5);

// Largest per-sample gradient Lipschitz constant, estimated by power
// iteration on each sample's (constant) Hessian through gradient
// differences. A sampled lower bound that converges to max_j ||H_j||.
double estimate_lipschitz(const DiscreteOcp& ocp, int power_iters, std::uint64_t seed);

}  // namespace pdeopt
