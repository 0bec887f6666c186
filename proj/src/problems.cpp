#include "pdeopt/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pdeopt {

CoefficientBundle ProblemInstance::sample_coefficients(std::span<const double> eta) const {
  if (static_cast<int>(eta.size()) != dimension())
    throw std::invalid_argument("sample_coefficients: parameter dimension mismatch");
  if (!box_.contains(eta))
    throw std::invalid_argument("sample_coefficients: parameter outside the box");
  return evaluate(eta);
}

LipschitzConstants ProblemInstance::lipschitz_constants() const {
  const double poincare = 1.0;
  const double m1m2 = poincare * poincare;
  const double ratio = m1m2 / eps_min_;
  return {2.0 * beta_, beta_ + ratio * ratio};
}

TransportInstance::TransportInstance(double beta, double sigma) : sigma_(sigma) {
  box_ = Box::unit(5);
  beta_ = beta;
  sigma_b_ = -1.0;  // state right-hand side is f - u
  bc_ = BoundaryKind::DirichletLeft;
  eps_min_ = 0.5 + std::exp(-1.0);
}

CoefficientBundle TransportInstance::evaluate(std::span<const double> eta) const {
  const Eigen::Vector2d z(eta[0], eta[1]);
  const double eps = 0.5 + std::exp(eta[2] - 1.0);
  const double v0 = eta[3];
  const double v1 = eta[4];
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma_ * sigma_);

  CoefficientBundle b;
  b.coeffs.diffusivity = [eps](const Eigen::Vector2d&) { return eps; };
  b.coeffs.velocity = [v0, v1](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(v0 - v1 * x.x(), v1 * x.y());
  };
  b.source = [z, inv_two_sigma2](const Eigen::Vector2d& x) {
    return std::exp(-(x - z).squaredNorm() * inv_two_sigma2);
  };
  return b;
}

DiffusionInstance::DiffusionInstance(int dimension, double beta) {
  if (dimension < 1 || dimension > 3)
    throw std::invalid_argument("DiffusionInstance: dimension must be in [1,3]");
  box_ = Box::symmetric(dimension);
  beta_ = beta;
  sigma_b_ = 1.0;  // state right-hand side is g + u
  bc_ = BoundaryKind::DirichletAll;
  // a0 = 1.5, |psi_k| <= 0.15 each, so a >= 1.5 - 0.45 > 1 over the box.
  eps_min_ = 1.5 - 0.15 * dimension;
  target_ = [](const Eigen::Vector2d& x) {
    return std::sin(std::numbers::pi * x.x()) * x.y();
  };
}

CoefficientBundle DiffusionInstance::evaluate(std::span<const double> eta) const {
  std::vector<double> c(eta.begin(), eta.end());
  CoefficientBundle b;
  b.coeffs.diffusivity = [c](const Eigen::Vector2d& x) {
    static constexpr double pi = std::numbers::pi;
    double a = 1.5;
    if (c.size() > 0) a += 0.15 * c[0] * std::sin(pi * x.x());
    if (c.size() > 1) a += 0.15 * c[1] * std::cos(pi * x.y());
    if (c.size() > 2) a += 0.15 * c[2] * std::sin(pi * x.x()) * std::cos(pi * x.y());
    return a;
  };
  b.source = [](const Eigen::Vector2d& x) {
    return std::exp(-4.0 * (x - Eigen::Vector2d(0.4, 0.6)).squaredNorm());
  };
  return b;
}

}  // namespace pdeopt
