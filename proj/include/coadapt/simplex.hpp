#pragma once

#include <vector>

namespace coadapt::simplex {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

/// Dense two-phase simplex with Bland's rule:
///   maximize cᵀx  subject to  A x ≤ b, x ≥ 0.
/// `b` may have entries of either sign. Rows of `A` must have c.size() entries.
Result maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                const std::vector<double>& c, double tol = 1e-11);

}  // namespace coadapt::simplex
