#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace pdeopt {

struct TraceRow {
  long k = 0;
  double err_l2 = std::numeric_limits<double>::quiet_NaN();     // ||u_k - u_ref||
  double objective = std::numeric_limits<double>::quiet_NaN();  // optional
  double qk = std::numeric_limits<double>::quiet_NaN();         // optional
  long pde_solves = 0;                                          // cumulative
  double wall_ms = 0.0;
};

// Per-iteration record of an optimizer run. Solve counts are cumulative and
// advance by 2 per stochastic iteration.
struct IterTrace {
  std::vector<TraceRow> rows;
  bool diverged = false;
  long diverged_at = -1;

  // err_l2 of the last recorded row.
  double final_err() const;
  // First k whose err_l2 is <= tol, -1 if never.
  long first_hit(double tol) const;
};

void write_trace_csv(std::ostream& os, const IterTrace& trace);

}  // namespace pdeopt
