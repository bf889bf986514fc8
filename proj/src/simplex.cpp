#include "coadapt/simplex.hpp"

#include <cmath>
#include <limits>

#include "coadapt/error.hpp"

namespace coadapt::simplex {

namespace {

struct Tableau {
  std::size_t rows = 0, cols = 0;  // cols excludes the RHS column
  std::vector<std::vector<double>> t;  // rows x (cols + 1)
  std::vector<double> obj;             // reduced costs, size cols + 1 (last = -value)
  std::vector<std::size_t> basis;

  void pivot(std::size_t r, std::size_t c) {
    auto& pr = t[r];
    const double p = pr[c];
    for (auto& v : pr) v /= p;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double f = t[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= f * pr[j];
    }
    const double f = obj[c];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= cols; ++j) obj[j] -= f * pr[j];
    }
    basis[r] = c;
  }

  // Maximizes over columns allowed[j]; returns false when unbounded.
  bool run(const std::vector<char>& allowed, double tol) {
    for (;;) {
      std::size_t enter = cols;
      for (std::size_t j = 0; j < cols; ++j) {
        if (allowed[j] && obj[j] > tol) {
          enter = j;
          break;
        }
      }
      if (enter == cols) return true;
      std::size_t leave = rows;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows; ++i) {
        if (t[i][enter] <= tol) continue;
        double ratio = t[i][cols] / t[i][enter];
        if (ratio < best - tol || (std::abs(ratio - best) <= tol && leave < rows && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == rows) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

Result maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                const std::vector<double>& c, double tol) {
  const std::size_t m = A.size(), n = c.size();
  if (b.size() != m) throw ArityError("simplex: row count of A and b differ");
  std::size_t artificials = 0;
  for (double v : b) artificials += v < 0.0 ? 1 : 0;

  Tableau tab;
  tab.rows = m;
  tab.cols = n + m + artificials;
  tab.t.assign(m, std::vector<double>(tab.cols + 1, 0.0));
  tab.basis.assign(m, 0);
  std::size_t next_art = n + m;
  for (std::size_t i = 0; i < m; ++i) {
    if (A[i].size() != n) throw ArityError("simplex: row width differs from objective size");
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.t[i][j] = sign * A[i][j];
    tab.t[i][n + i] = sign;
    tab.t[i][tab.cols] = sign * b[i];
    if (sign < 0.0) {
      tab.t[i][next_art] = 1.0;
      tab.basis[i] = next_art++;
    } else {
      tab.basis[i] = n + i;
    }
  }

  std::vector<char> allowed(tab.cols, 1);
  if (artificials > 0) {
    // Phase 1: maximize −Σ artificials.
    tab.obj.assign(tab.cols + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis[i] < n + m) continue;
      for (std::size_t j = 0; j <= tab.cols; ++j) tab.obj[j] += tab.t[i][j];
    }
    for (std::size_t j = n + m; j < tab.cols; ++j) tab.obj[j] = 0.0;
    tab.run(allowed, tol);
    const double scale = 1.0 + std::abs(tab.obj[tab.cols]);
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis[i] >= n + m) infeasibility += tab.t[i][tab.cols];
    }
    if (infeasibility > 1e-9 * scale) return Result{Status::infeasible, {}, 0.0};
    // Drive remaining (zero-valued) artificials out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis[i] < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j) {
        if (std::abs(tab.t[i][j]) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = n + m; j < tab.cols; ++j) allowed[j] = 0;
  }

  // Phase 2 reduced costs for the current basis.
  tab.obj.assign(tab.cols + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) tab.obj[j] = c[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t bcol = tab.basis[i];
    const double cb = bcol < n ? c[bcol] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= tab.cols; ++j) tab.obj[j] -= cb * tab.t[i][j];
  }
  if (!tab.run(allowed, tol)) return Result{Status::unbounded, {}, 0.0};

  Result r;
  r.status = Status::optimal;
  r.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis[i] < n) r.x[tab.basis[i]] = tab.t[i][tab.cols];
  }
  for (std::size_t j = 0; j < n; ++j) r.objective += c[j] * r.x[j];
  return r;
}

}  // namespace coadapt::simplex
