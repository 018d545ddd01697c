#pragma once

#include <cstddef>
#include <vector>

#include "hiersel/model_core.hpp"

namespace hsel {

// One knot of the LASSO homotopy.
//
// `active_set` lists the variables active on the segment that ends at this
// knot, so consecutive knots differ by exactly one variable. `beta` is the
// solution of the l1-constrained problem with bound `t` (= ||beta||_1), and
// `lambda` is the common absolute correlation n^-1 |Z_j'(y - Z beta)| of
// the active columns, i.e. half the equivalent penalty r.
struct PathBreakpoint {
  double t = 0.0;
  double lambda = 0.0;
  SparseCoefficients beta;
  std::vector<std::size_t> active_set;
};

struct RegularizationPath {
  std::vector<PathBreakpoint> breakpoints;
  // Set when the maximal correlation fell below 1e-12 (or the knot budget
  // ran out) before the requested model size was reached.
  bool stalled = false;

  const PathBreakpoint& last() const { return breakpoints.back(); }
};

/// LARS with the LASSO modification, started from beta = 0 and stopped at the
/// first knot whose active set has stop_size variables. Ties between entering
/// variables go to the lowest column index.
RegularizationPath lars_path(const DesignMatrix& z, const ResponseVector& y, std::size_t stop_size);

/// Same homotopy on an arbitrary matrix; used where columns are already
/// scaled by the caller.
RegularizationPath lars_path(const Matrix& z, const Vector& y, std::size_t stop_size);

/// argmin n^-1 ||y - Z beta||^2 + r ||beta||_1, read off the homotopy at
/// lambda = r / 2.
SparseCoefficients lasso_penalized(const DesignMatrix& z, const ResponseVector& y, double r);
SparseCoefficients lasso_penalized(const Matrix& z, const Vector& y, double r);

/// n^-1 ||y - Z beta||^2 + r ||beta||_1.
double lasso_objective(const Matrix& z, const Vector& y, const SparseCoefficients& beta, double r);

/// A * sqrt(log(p) / n).
double default_penalty(double n, double p, double a);

/// T values at which the active set first exceeds each multiple of `mark`
/// (mark, 2 mark, ...). Entry k is the T of the first knot whose active set
/// is larger than k * mark, for marks actually crossed along the path.
struct MarkThreshold {
  std::size_t mark = 0;
  double t = 0.0;
};
std::vector<MarkThreshold> mark_thresholds(const RegularizationPath& path, std::size_t mark);

}  // namespace hsel
