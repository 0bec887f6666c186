#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pdeopt/mesh.hpp"

namespace pdeopt {

using SpMat = Eigen::SparseMatrix<double>;

// P1 finite element space on a structured mesh. Owns the mass matrix; every
// norm and inner product reported anywhere in this project goes through
// l2_inner / l2_norm (the L2(D) pairing), never the raw coefficient dot.
class DiscreteSpace {
 public:
  explicit DiscreteSpace(StructuredMesh mesh);

  const StructuredMesh& mesh() const { return mesh_; }
  int dof_count() const { return mesh_.n_vertices(); }
  const SpMat& mass() const { return mass_; }
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_; }

  double l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double l2_norm(const Eigen::VectorXd& u) const;

  // Nodal interpolant of a scalar function.
  Eigen::VectorXd interpolate(const std::function<double(const Eigen::Vector2d&)>& f) const;

 private:
  StructuredMesh mesh_;
  SpMat mass_;
  std::vector<int> dirichlet_;
};

SpMat assemble_mass(const StructuredMesh& mesh);

// Coefficients of one parameter sample of the operator
//   -div(a grad y) + V . grad y
// with natural (do-nothing) conditions outside the essential boundary.
struct SampleCoefficients {
  std::function<double(const Eigen::Vector2d&)> diffusivity;          // required, > 0
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> velocity;    // empty means V = 0

  static SampleCoefficients constant(double eps);
};

// Assembled sparse operator for one sample, with the essential rows/columns
// eliminated symmetrically (unit diagonal on constrained dofs). Factorized
// on construction; the immutable factorization serves both state and
// adjoint solves and is safe to use from many threads.
class OperatorMatrix {
 public:
  OperatorMatrix(const DiscreteSpace& space, SpMat eliminated);
  OperatorMatrix(OperatorMatrix&&) noexcept = default;
  OperatorMatrix& operator=(OperatorMatrix&&) noexcept = default;

  const SpMat& matrix() const { return a_; }
  const std::vector<int>& eliminated_dofs() const;

  // Direct sparse solve on the free dofs to relative residual <= 1e-12,
  // exact zeros on the constrained dofs. Throws on singular systems and on
  // residual stagnation.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  // Same with the transposed operator, reusing the factorization.
  Eigen::VectorXd solve_adjoint(const Eigen::VectorXd& rhs) const;

  std::size_t factor_bytes() const;  // rough footprint, for the cache cap

 private:
  struct Factor;
  Eigen::VectorXd solve_impl(const Eigen::VectorXd& rhs, bool transposed) const;
  const DiscreteSpace* space_;
  SpMat a_;
  double anorm_ = 0.0;  // max absolute column sum, the backward-error scale
  std::shared_ptr<Factor> factor_;
};

OperatorMatrix assemble_operator(const DiscreteSpace& space, const SampleCoefficients& coeffs);

Eigen::VectorXd solve_linear(const OperatorMatrix& op, const Eigen::VectorXd& rhs);
Eigen::VectorXd solve_adjoint(const OperatorMatrix& op, const Eigen::VectorXd& rhs);

// Point evaluation of the P1 function with coefficients u.
double eval_p1(const StructuredMesh& mesh, const Eigen::VectorXd& u, const Eigen::Vector2d& x);

// Nodal interpolation of a P1 function onto another structured mesh
// (exact whenever `to` refines `from`).
Eigen::VectorXd interpolate_p1(const DiscreteSpace& from, const Eigen::VectorXd& u,
                               const DiscreteSpace& to);

// Field export: one "x,y,value" line per vertex.
void write_field_csv(std::ostream& os, const DiscreteSpace& space, const Eigen::VectorXd& u);

}  // namespace pdeopt
