#pragma once

#include <Eigen/Dense>
#include <array>

namespace pdeopt {

enum class BoundaryKind {
  DirichletLeft,  // essential condition on {0} x [0,1], natural elsewhere
  DirichletAll,   // essential condition on the whole boundary
};

// Structured triangulation of the unit square: m subdivisions per side,
// vertices on a row-major grid, every cell split along the bottom-left to
// top-right diagonal into two counterclockwise triangles of area h^2/2.
struct StructuredMesh {
  int m = 0;
  BoundaryKind bc = BoundaryKind::DirichletLeft;

  double h() const { return 1.0 / m; }
  int n_vertices() const { return (m + 1) * (m + 1); }
  int n_triangles() const { return 2 * m * m; }

  // Vertex v = iy*(m+1) + ix sits at (ix*h, iy*h).
  Eigen::Vector2d vertex(int v) const {
    const int ix = v % (m + 1);
    const int iy = v / (m + 1);
    return {ix * h(), iy * h()};
  }

  std::array<int, 3> triangle(int t) const {
    const int cell = t / 2;
    const int cx = cell % m;
    const int cy = cell / m;
    const int a = cy * (m + 1) + cx;          // bottom-left
    const int b = a + 1;                      // bottom-right
    const int c = a + (m + 1) + 1;            // top-right
    const int d = a + (m + 1);                // top-left
    return (t % 2 == 0) ? std::array<int, 3>{a, b, c} : std::array<int, 3>{a, c, d};
  }

  bool is_dirichlet(int v) const {
    const int ix = v % (m + 1);
    const int iy = v / (m + 1);
    if (bc == BoundaryKind::DirichletAll)
      return ix == 0 || ix == m || iy == 0 || iy == m;
    // Closure of the left edge, corners included.
    return ix == 0;
  }

  bool is_boundary(int v) const {
    const int ix = v % (m + 1);
    const int iy = v / (m + 1);
    return ix == 0 || ix == m || iy == 0 || iy == m;
  }
};

StructuredMesh build_mesh(int m, BoundaryKind bc = BoundaryKind::DirichletLeft);

}  // namespace pdeopt
