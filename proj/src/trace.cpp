#include "pdeopt/trace.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace pdeopt {

double IterTrace::final_err() const {
  return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().err_l2;
}

long IterTrace::first_hit(double tol) const {
  for (const auto& row : rows)
    if (row.err_l2 <= tol) return row.k;
  return -1;
}

void write_trace_csv(std::ostream& os, const IterTrace& trace) {
  os << "k,err_l2,objective,qk,pde_solves,wall_ms\n";
  char buf[192];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%ld,%.3f\n", r.k, r.err_l2,
                  r.objective, r.qk, r.pde_solves, r.wall_ms);
    os << buf;
  }
  if (trace.diverged) os << "# diverged at k=" << trace.diverged_at << "\n";
}

}  // namespace pdeopt
