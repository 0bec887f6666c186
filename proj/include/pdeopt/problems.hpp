#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>

#include "pdeopt/fem.hpp"
#include "pdeopt/quadrature.hpp"

namespace pdeopt {

// One parameter sample of a problem: operator coefficients plus source term.
struct CoefficientBundle {
  SampleCoefficients coeffs;
  std::function<double(const Eigen::Vector2d&)> source;  // f(x; eta)
};

struct LipschitzConstants {
  double l;  // strong convexity, 2*beta
  double L;  // analytic gradient Lipschitz bound
};

// Parametric optimal control problem on the unit square:
//   state      A(eta) y = M (f(eta) + sigma_b * u)   on the chosen space,
//   objective  E[ 1/2 ||y - z_d||^2 ] + beta/2 ||u||^2,
// with sigma_b in {+1,-1} giving the sign with which the control enters the
// right-hand side (and, with the adjoint convention A^T p = M (y - z_d),
// equally the sign of the adjoint term in the gradient beta*u + sigma_b*p).
class ProblemInstance {
 public:
  virtual ~ProblemInstance() = default;

  int dimension() const { return box_.dimension(); }
  const Box& parameter_box() const { return box_; }
  double beta() const { return beta_; }
  double sigma_b() const { return sigma_b_; }
  BoundaryKind boundary() const { return bc_; }
  double eps_min() const { return eps_min_; }

  // Deterministic evaluation of the coefficient fields at eta; rejects
  // points outside the parameter box.
  CoefficientBundle sample_coefficients(std::span<const double> eta) const;

  // Target state z_d; empty function means identically zero.
  const std::function<double(const Eigen::Vector2d&)>& target() const { return target_; }

  // l = 2*beta and the analytic bound L = beta + (M1*M2/a_min)^2 with the
  // operator-norm factors bounded through a Poincare constant <= 1. The
  // bound is deliberately conservative; step sizes are tuned empirically.
  LipschitzConstants lipschitz_constants() const;

 protected:
  virtual CoefficientBundle evaluate(std::span<const double> eta) const = 0;

  Box box_;
  double beta_ = 1e-4;
  double sigma_b_ = 1.0;
  double eps_min_ = 1.0;
  BoundaryKind bc_ = BoundaryKind::DirichletLeft;
  std::function<double(const Eigen::Vector2d&)> target_;  // empty: z_d = 0
};

// Contaminant-transport benchmark: five uniform parameters on [0,1]^5,
//   f(x) = exp(-|x - (eta1,eta2)|^2 / 2),
//   eps  = 0.5 + exp(eta3 - 1),
//   V(x) = (eta4 - eta5 x1, eta5 x2),
// zero target, control entering the source as f - u (sigma_b = -1),
// essential condition on the left edge only.
class TransportInstance : public ProblemInstance {
 public:
  explicit TransportInstance(double beta = 1e-4, double sigma = 1.0);

 protected:
  CoefficientBundle evaluate(std::span<const double> eta) const override;

 private:
  double sigma_;
};

// Small random-diffusion instance for unit tests: a(x;eta) = a0 + sum_k
// eta_k psi_k(x), V = 0, control entering as g + u (sigma_b = +1), essential
// condition on the whole boundary, configurable target.
class DiffusionInstance : public ProblemInstance {
 public:
  DiffusionInstance(int dimension = 2, double beta = 1e-2);

  void set_target(std::function<double(const Eigen::Vector2d&)> zd) { target_ = std::move(zd); }

 protected:
  CoefficientBundle evaluate(std::span<const double> eta) const override;
};

}  // namespace pdeopt
