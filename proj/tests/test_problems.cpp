#include <doctest.h>

#include <cmath>
#include <memory>

#include "pdeopt/ocp.hpp"
#include "pdeopt/problems.hpp"
#include "pdeopt/rng.hpp"

using namespace pdeopt;
using Eigen::Vector2d;
using Eigen::VectorXd;

TEST_CASE("transport coefficients at pinned parameters") {
  const TransportInstance inst;
  CHECK(inst.dimension() == 5);
  CHECK(inst.beta() == doctest::Approx(1e-4));
  CHECK(inst.sigma_b() == -1.0);

  const double center[5] = {0.5, 0.5, 1.0, 0.0, 0.0};
  const auto b = inst.sample_coefficients(center);
  CHECK(b.coeffs.diffusivity(Vector2d(0.3, 0.7)) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(b.coeffs.velocity(Vector2d(0.3, 0.7)).norm() == doctest::Approx(0.0));
  CHECK(b.source(Vector2d(0.5, 0.5)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.source(Vector2d(1.5, 0.5)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));

  const double low3[5] = {0.2, 0.8, 0.0, 0.3, 0.4};
  const auto b2 = inst.sample_coefficients(low3);
  CHECK(b2.coeffs.diffusivity(Vector2d(0.1, 0.1)) ==
        doctest::Approx(0.5 + std::exp(-1.0)).epsilon(1e-15));

  const double vel[5] = {0.5, 0.5, 0.5, 1.0, 0.0};
  const auto b3 = inst.sample_coefficients(vel);
  for (double x : {0.0, 0.4, 1.0})
    for (double y : {0.0, 0.6, 1.0}) {
      CHECK(b3.coeffs.velocity(Vector2d(x, y)).x() == doctest::Approx(1.0));
      CHECK(b3.coeffs.velocity(Vector2d(x, y)).y() == doctest::Approx(0.0));
    }

  const double outside[5] = {0.5, 0.5, 1.5, 0.0, 0.0};
  CHECK_THROWS(inst.sample_coefficients(outside));
  const double short_eta[3] = {0.5, 0.5, 0.5};
  CHECK_THROWS(inst.sample_coefficients(std::span<const double>(short_eta, 3)));
}

TEST_CASE("transport coefficient bounds over the box") {
  const TransportInstance inst;
  Rng rng(77);
  double eta[5];
  for (int t = 0; t < 10000; ++t) {
    for (double& e : eta) e = rng.next_double();
    const auto b = inst.sample_coefficients(eta);
    const Vector2d x(rng.next_double(), rng.next_double());
    const double eps = b.coeffs.diffusivity(x);
    CHECK(eps >= 0.5 + std::exp(-1.0) - 1e-12);
    CHECK(eps <= 1.5 + 1e-12);
    CHECK(b.coeffs.velocity(x).lpNorm<Eigen::Infinity>() <= 2.0);
    const double f = b.source(x);
    CHECK(f > 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("coefficient evaluation is pure") {
  const TransportInstance inst;
  const double eta[5] = {0.11, 0.93, 0.47, 0.62, 0.08};
  const auto a = inst.sample_coefficients(eta);
  const auto b = inst.sample_coefficients(eta);
  const Vector2d x(0.37, 0.81);
  CHECK(a.coeffs.diffusivity(x) == b.coeffs.diffusivity(x));
  CHECK(a.source(x) == b.source(x));
  CHECK(a.coeffs.velocity(x) == b.coeffs.velocity(x));
}

TEST_CASE("diffusion instance ellipticity") {
  const DiffusionInstance inst(3);
  CHECK(inst.sigma_b() == 1.0);
  CHECK(inst.boundary() == BoundaryKind::DirichletAll);
  Rng rng(13);
  double eta[3];
  for (int t = 0; t < 2000; ++t) {
    for (double& e : eta) e = 2.0 * rng.next_double() - 1.0;
    const auto b = inst.sample_coefficients(eta);
    const Vector2d x(rng.next_double(), rng.next_double());
    const double a = b.coeffs.diffusivity(x);
    CHECK(a >= inst.eps_min() - 1e-12);
    CHECK(a <= 1.5 + 0.45 + 1e-12);
  }
}

TEST_CASE("lipschitz constants") {
  const TransportInstance inst;
  const auto [l, L] = inst.lipschitz_constants();
  CHECK(l == doctest::Approx(2e-4).epsilon(1e-15));
  CHECK(L >= inst.beta());

  // Sampled two-point ratios never exceed the analytic bound.
  auto inst_ptr = std::make_shared<TransportInstance>();
  auto space = std::make_shared<DiscreteSpace>(build_mesh(8, inst_ptr->boundary()));
  const DiscreteOcp ocp(inst_ptr, space,
                        QuadratureRule::tensor_gauss_legendre(2, inst_ptr->parameter_box()));
  Rng rng(3);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    VectorXd u1(space->dof_count()), u2(space->dof_count());
    for (int i = 0; i < space->dof_count(); ++i) u1[i] = 2.0 * rng.next_double() - 1.0;
    for (int i = 0; i < space->dof_count(); ++i) u2[i] = 2.0 * rng.next_double() - 1.0;
    const std::size_t j = rng.next_u64() % ocp.n();
    const double num =
        space->l2_norm(ocp.per_sample_gradient(u1, j) - ocp.per_sample_gradient(u2, j));
    worst = std::max(worst, num / space->l2_norm(u1 - u2));
  }
  CHECK(worst <= L);
  CHECK(worst > 0.0);
}
