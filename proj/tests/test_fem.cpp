#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "pdeopt/fem.hpp"
#include "pdeopt/rng.hpp"

using namespace pdeopt;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

constexpr double pi = std::numbers::pi;

// Element-by-element dense assembly with analytic element integrals,
// independent of the production path. Diffusivity and velocity components
// must be affine for the integrals to be exact.
struct AffineField {
  double c0 = 0.0, cx = 0.0, cy = 0.0;
  double operator()(const Vector2d& p) const { return c0 + cx * p.x() + cy * p.y(); }
};

struct DenseOperators {
  MatrixXd mass;
  MatrixXd op;  // diffusion + advection, no elimination
};

DenseOperators assemble_dense(const StructuredMesh& mesh, const AffineField& a,
                              const AffineField& vx, const AffineField& vy) {
  const int n = mesh.n_vertices();
  DenseOperators out{MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto tri = mesh.triangle(t);
    Vector2d p[3] = {mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2])};
    const double area =
        0.5 * ((p[1].x() - p[0].x()) * (p[2].y() - p[0].y()) -
               (p[2].x() - p[0].x()) * (p[1].y() - p[0].y()));

    // Barycentric gradients from the coefficient system [1 x y] c = e_i.
    MatrixXd vander(3, 3);
    for (int i = 0; i < 3; ++i) vander.row(i) << 1.0, p[i].x(), p[i].y();
    const MatrixXd coef = vander.inverse();  // row 1,2 hold d/dx, d/dy per column i
    Vector2d grad[3];
    for (int i = 0; i < 3; ++i) grad[i] = Vector2d(coef(1, i), coef(2, i));

    const Vector2d centroid = (p[0] + p[1] + p[2]) / 3.0;
    const double int_a = area * a(centroid);  // exact for affine a

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        out.mass(tri[i], tri[j]) += area / 12.0 * (i == j ? 2.0 : 1.0);
        out.op(tri[i], tri[j]) += int_a * grad[i].dot(grad[j]);
      }

    // Advection: int_T (V . grad phi_j) phi_i with
    //   int_T phi_i = area/3, int_T phi_i x = area (2 x_i + x_j + x_k)/12.
    for (int i = 0; i < 3; ++i) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const double ix = area * (2.0 * p[i].x() + p[i1].x() + p[i2].x()) / 12.0;
      const double iy = area * (2.0 * p[i].y() + p[i1].y() + p[i2].y()) / 12.0;
      const double i1i = area / 3.0;
      const Vector2d int_v(vx.c0 * i1i + vx.cx * ix + vx.cy * iy,
                           vy.c0 * i1i + vy.cx * ix + vy.cy * iy);
      for (int j = 0; j < 3; ++j) out.op(tri[i], tri[j]) += grad[j].dot(int_v);
    }
  }
  return out;
}

MatrixXd eliminate_dense(const MatrixXd& a, const StructuredMesh& mesh) {
  MatrixXd out = a;
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (!mesh.is_dirichlet(v)) continue;
    out.row(v).setZero();
    out.col(v).setZero();
    out(v, v) = 1.0;
  }
  return out;
}

// Truncated separable series for -lap y = 1 on the unit square with
// homogeneous Dirichlet conditions.
double poisson_unit_series(double x, double y) {
  double val = 0.0;
  for (int mm = 199; mm >= 1; mm -= 2)
    for (int nn = 199; nn >= 1; nn -= 2) {
      const double c = 16.0 / (std::pow(pi, 4) * mm * nn * (mm * mm + nn * nn));
      val += c * std::sin(mm * pi * x) * std::sin(nn * pi * y);
    }
  return val;
}

VectorXd random_vector(int n, Rng& rng) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = 2.0 * rng.next_double() - 1.0;
  return v;
}

}  // namespace

TEST_CASE("mesh structure") {
  CHECK_THROWS(build_mesh(0));

  const auto m1 = build_mesh(1);
  CHECK(m1.n_vertices() == 4);
  CHECK(m1.n_triangles() == 2);

  const auto m2 = build_mesh(2);
  CHECK(m2.n_vertices() == 9);
  CHECK(m2.n_triangles() == 8);

  double total_area = 0.0;
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < m2.n_triangles(); ++t) {
    const auto tri = m2.triangle(t);
    const Vector2d a = m2.vertex(tri[0]), b = m2.vertex(tri[1]), c = m2.vertex(tri[2]);
    const double area =
        0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    CHECK(area > 0.0);  // counterclockwise
    CHECK(area == doctest::Approx(m2.h() * m2.h() / 2.0).epsilon(1e-14));
    total_area += area;
    for (int e = 0; e < 3; ++e) {
      const int v0 = tri[e], v1 = tri[(e + 1) % 3];
      ++edge_count[{std::min(v0, v1), std::max(v0, v1)}];
    }
  }
  CHECK(total_area == doctest::Approx(1.0).epsilon(1e-14));
  for (const auto& [edge, count] : edge_count) {
    const bool boundary_edge = count == 1;
    CHECK((count == 1 || count == 2));
    if (!boundary_edge) CHECK(count == 2);
  }

  // Dirichlet tagging: every vertex with x = 0, corners included.
  const auto m8 = build_mesh(8);
  int tagged = 0;
  for (int v = 0; v < m8.n_vertices(); ++v)
    if (m8.is_dirichlet(v)) {
      ++tagged;
      CHECK(m8.vertex(v).x() == 0.0);
    }
  CHECK(tagged == 9);

  const auto m8_all = build_mesh(8, BoundaryKind::DirichletAll);
  int tagged_all = 0;
  for (int v = 0; v < m8_all.n_vertices(); ++v)
    if (m8_all.is_dirichlet(v)) ++tagged_all;
  CHECK(tagged_all == 4 * 8);
}

TEST_CASE("mass matrix properties") {
  const DiscreteSpace space(build_mesh(2));
  const VectorXd ones = VectorXd::Ones(space.dof_count());
  CHECK(ones.dot(space.mass() * ones) == doctest::Approx(1.0).epsilon(1e-12));

  // Positive definiteness on a small mesh.
  const MatrixXd dense = MatrixXd(space.mass());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(dense);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  CHECK((dense - dense.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-15));

  // Nodal interpolant of x against 1: exact integral of x.
  const VectorXd xs = space.interpolate([](const Vector2d& p) { return p.x(); });
  CHECK(space.l2_inner(xs, ones) == doctest::Approx(0.5).epsilon(1e-13));

  // |x|_L2 = sqrt(1/3) up to O(h^2) interpolation error.
  const DiscreteSpace fine(build_mesh(64));
  const VectorXd xf = fine.interpolate([](const Vector2d& p) { return p.x(); });
  CHECK(fine.l2_norm(xf) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-4));

  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const VectorXd u = random_vector(space.dof_count(), rng);
    const VectorXd v = random_vector(space.dof_count(), rng);
    CHECK(space.l2_norm(u) > 0.0);
    CHECK(std::abs(space.l2_inner(u, v)) <= space.l2_norm(u) * space.l2_norm(v) + 1e-12);
  }
}

TEST_CASE("assembly agrees with the dense analytic oracle") {
  for (int m : {1, 2, 3, 4}) {
    for (BoundaryKind bc : {BoundaryKind::DirichletLeft, BoundaryKind::DirichletAll}) {
      const DiscreteSpace space(build_mesh(m, bc));
      const AffineField a{1.3, 0.2, -0.1};
      const AffineField vx{0.7, -0.5, 0.0};
      const AffineField vy{-0.2, 0.0, 0.5};

      SampleCoefficients coeffs;
      coeffs.diffusivity = [&](const Vector2d& p) { return a(p); };
      coeffs.velocity = [&](const Vector2d& p) { return Vector2d(vx(p), vy(p)); };
      const OperatorMatrix op = assemble_operator(space, coeffs);

      const DenseOperators dense = assemble_dense(space.mesh(), a, vx, vy);
      const MatrixXd expected = eliminate_dense(dense.op, space.mesh());
      const MatrixXd mass_expected = dense.mass;

      const MatrixXd got = MatrixXd(op.matrix());
      CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-14);
      const MatrixXd got_mass = MatrixXd(space.mass());
      CHECK((got_mass - mass_expected).cwiseAbs().maxCoeff() < 1e-14);

      // Sparsity: every meaningful entry of the oracle is stored.
      std::set<std::pair<int, int>> stored;
      for (int k = 0; k < op.matrix().outerSize(); ++k)
        for (SpMat::InnerIterator it(op.matrix(), k); it; ++it)
          stored.insert({static_cast<int>(it.row()), static_cast<int>(it.col())});
      for (int i = 0; i < expected.rows(); ++i)
        for (int j = 0; j < expected.cols(); ++j)
          if (std::abs(expected(i, j)) > 1e-14) CHECK(stored.count({i, j}) == 1);
    }
  }
}

TEST_CASE("pure diffusion stencil and symmetry") {
  const DiscreteSpace space(build_mesh(4, BoundaryKind::DirichletAll));
  const OperatorMatrix op = assemble_operator(space, SampleCoefficients::constant(1.0));
  const MatrixXd a = MatrixXd(op.matrix());
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-13);

  // Interior row of the unit-diffusivity operator: the classical 5-point
  // pattern {4, -1, -1, -1, -1} with zero couplings across the diagonal.
  const int mdim = 4;
  const int v = 2 * (mdim + 1) + 2;  // vertex (2,2)
  CHECK(a(v, v) == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(a(v, v + 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(a(v, v - 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(a(v, v + mdim + 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(a(v, v - mdim - 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(std::abs(a(v, v + mdim + 2)) < 1e-14);
  CHECK(std::abs(a(v, v - mdim - 2)) < 1e-14);

  // Weak Laplacian of the interpolant of x vanishes against interior tests.
  const DiscreteSpace left(build_mesh(4, BoundaryKind::DirichletLeft));
  const OperatorMatrix op_left = assemble_operator(left, SampleCoefficients::constant(1.0));
  const VectorXd xs = left.interpolate([](const Vector2d& p) { return p.x(); });
  const VectorXd residual = op_left.matrix() * xs;
  for (int w = 0; w < left.dof_count(); ++w)
    if (!left.mesh().is_boundary(w)) CHECK(std::abs(residual[w]) < 1e-14);

  CHECK_THROWS(assemble_operator(space, SampleCoefficients::constant(-1.0)));
}

TEST_CASE("linear solves") {
  const DiscreteSpace space(build_mesh(8));
  SampleCoefficients coeffs;
  coeffs.diffusivity = [](const Vector2d&) { return 1.2; };
  coeffs.velocity = [](const Vector2d& p) { return Vector2d(0.8 - 0.3 * p.x(), 0.3 * p.y()); };
  const OperatorMatrix op = assemble_operator(space, coeffs);

  Rng rng(17);
  VectorXd y0 = random_vector(space.dof_count(), rng);
  for (int d : space.dirichlet_dofs()) y0[d] = 0.0;

  const VectorXd recovered = op.solve(op.matrix() * y0);
  CHECK((recovered - y0).norm() < 1e-10 * y0.norm());
  for (int d : space.dirichlet_dofs()) CHECK(recovered[d] == 0.0);

  // Transpose identity and duality of matched solves.
  const VectorXd x = random_vector(space.dof_count(), rng);
  const VectorXd w = random_vector(space.dof_count(), rng);
  CHECK((op.matrix() * x).dot(w) ==
        doctest::Approx(x.dot(op.matrix().transpose() * w)).epsilon(1e-12));

  const VectorXd b1 = space.mass() * random_vector(space.dof_count(), rng);
  const VectorXd b2 = space.mass() * random_vector(space.dof_count(), rng);
  const VectorXd y = op.solve(b1);
  const VectorXd p = op.solve_adjoint(b2);
  VectorXd b1m = b1, b2m = b2;
  for (int d : space.dirichlet_dofs()) b1m[d] = b2m[d] = 0.0;
  CHECK(b1m.dot(p) == doctest::Approx(b2m.dot(y)).epsilon(1e-10));

  // Zero velocity: adjoint solve equals the primal solve.
  const OperatorMatrix sym = assemble_operator(space, SampleCoefficients::constant(0.9));
  CHECK((sym.solve(b1) - sym.solve_adjoint(b1)).norm() < 1e-12);
}

TEST_CASE("poisson benchmark against the separable series") {
  const DiscreteSpace space(build_mesh(16, BoundaryKind::DirichletAll));
  const OperatorMatrix op = assemble_operator(space, SampleCoefficients::constant(1.0));
  const VectorXd rhs = space.mass() * VectorXd::Ones(space.dof_count());
  const VectorXd y = op.solve(rhs);

  const VectorXd exact = space.interpolate(
      [](const Vector2d& p) { return poisson_unit_series(p.x(), p.y()); });
  const double err = space.l2_norm(y - exact);
  // Second-order accurate: at h = 1/16 the discrete error sits near 1e-4.
  CHECK(err < 5e-4);
  CHECK(err > 1e-6);
}

TEST_CASE("manufactured solution converges at second order") {
  // -lap y = ((pi/2)^2 + pi^2) y with y = sin(pi x/2) cos(pi y), which has a
  // vanishing conormal derivative on the natural part of the boundary.
  auto exact = [](const Vector2d& p) {
    return std::sin(0.5 * pi * p.x()) * std::cos(pi * p.y());
  };
  const double lam = 0.25 * pi * pi + pi * pi;

  std::vector<double> errs;
  std::vector<int> ms = {4, 8, 16, 32, 64};
  for (int m : ms) {
    const DiscreteSpace space(build_mesh(m, BoundaryKind::DirichletLeft));
    const OperatorMatrix op = assemble_operator(space, SampleCoefficients::constant(1.0));
    const VectorXd f = space.interpolate([&](const Vector2d& p) { return lam * exact(p); });
    const VectorXd y = op.solve(space.mass() * f);
    errs.push_back(space.l2_norm(y - space.interpolate(exact)));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order > 1.8);
    CHECK(order < 2.2);
  }
}

TEST_CASE("adjoint solve equals solve on the explicitly transposed matrix") {
  const DiscreteSpace space(build_mesh(6));
  SampleCoefficients coeffs;
  coeffs.diffusivity = [](const Vector2d&) { return 1.0; };
  coeffs.velocity = [](const Vector2d& p) { return Vector2d(1.0 - 0.6 * p.x(), 0.6 * p.y()); };
  const OperatorMatrix op = assemble_operator(space, coeffs);

  const OperatorMatrix op_t(space, SpMat(op.matrix().transpose()));
  Rng rng(29);
  for (int t = 0; t < 5; ++t) {
    const VectorXd b = random_vector(space.dof_count(), rng);
    CHECK((op.solve_adjoint(b) - op_t.solve(b)).norm() < 1e-12);
  }
}

TEST_CASE("p1 interpolation between meshes") {
  const DiscreteSpace coarse(build_mesh(4));
  const DiscreteSpace fine(build_mesh(8));
  Rng rng(31);
  const VectorXd u = random_vector(coarse.dof_count(), rng);

  // Exact at shared vertices and linear along cell edges.
  const VectorXd uf = interpolate_p1(coarse, u, fine);
  for (int v = 0; v < coarse.dof_count(); ++v) {
    const Vector2d p = coarse.mesh().vertex(v);
    CHECK(eval_p1(fine.mesh(), uf, p) == doctest::Approx(u[v]).epsilon(1e-14));
  }

  // Global linears are reproduced exactly on any target mesh.
  const DiscreteSpace other(build_mesh(7));
  const VectorXd lin = coarse.interpolate(
      [](const Vector2d& p) { return 0.3 - 1.7 * p.x() + 0.4 * p.y(); });
  const VectorXd lin_other = interpolate_p1(coarse, lin, other);
  const VectorXd lin_exact = other.interpolate(
      [](const Vector2d& p) { return 0.3 - 1.7 * p.x() + 0.4 * p.y(); });
  CHECK((lin_other - lin_exact).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("singular systems are reported") {
  const DiscreteSpace space(build_mesh(2));
  SpMat zero(space.dof_count(), space.dof_count());
  const OperatorMatrix op(space, std::move(zero));
  CHECK_THROWS(op.solve(Eigen::VectorXd::Ones(space.dof_count())));
}
