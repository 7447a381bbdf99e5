#include <algorithm>
#include <cmath>
#include <limits>

#include "rmab/errors.hpp"
#include "rmab/kernels.hpp"
#include "rmab/lp.hpp"

namespace rmab {

void LpProblem::add_eq(std::vector<double> row, double rhs) {
  row.resize(num_vars, 0.0);
  eq_rows.push_back(std::move(row));
  eq_rhs.push_back(rhs);
}

void LpProblem::add_le(std::vector<double> row, double rhs) {
  row.resize(num_vars, 0.0);
  le_rows.push_back(std::move(row));
  le_rhs.push_back(rhs);
}

namespace {

// Standard form: structural columns, one slack per <= row, one artificial
// per row. The last entry of every tableau row is the right-hand side.
class Tableau {
 public:
  Tableau(const LpProblem& p, const SimplexOptions& opt)
      : opt_(opt),
        n_(p.num_vars),
        s_(p.le_rows.size()),
        m_(p.eq_rows.size() + p.le_rows.size()),
        width_(n_ + s_ + m_ + 1) {
    rows_.assign(m_, std::vector<double>(width_, 0.0));
    sign_.assign(m_, 1.0);
    origin_.resize(m_);
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      std::vector<double>& r = rows_[i];
      const bool eq = i < p.eq_rows.size();
      const std::vector<double>& src = eq ? p.eq_rows[i] : p.le_rows[i - p.eq_rows.size()];
      std::copy(src.begin(), src.end(), r.begin());
      if (!eq) r[n_ + (i - p.eq_rows.size())] = 1.0;
      r[width_ - 1] = eq ? p.eq_rhs[i] : p.le_rhs[i - p.eq_rows.size()];
      if (r[width_ - 1] < 0.0) {
        for (double& v : r) v = -v;
        sign_[i] = -1.0;
      }
      r[artificial(i)] = 1.0;
      basis_[i] = artificial(i);
      origin_[i] = i;
    }
  }

  std::size_t artificial(std::size_t row) const { return n_ + s_ + row; }
  bool is_artificial(std::size_t col) const { return col >= n_ + s_; }

  // Minimizes cost over the columns below `allowed_end`. Returns false if unbounded.
  bool optimize(const std::vector<double>& cost, std::size_t allowed_end) {
    price(cost);
    const std::size_t rhs = width_ - 1;
    for (;;) {
      std::size_t enter = allowed_end;
      for (std::size_t j = 0; j < allowed_end; ++j)
        if (z_[j] < -opt_.optimality_tol && !in_basis(j)) {
          enter = j;
          break;
        }
      if (enter == allowed_end) return true;

      std::size_t leave = rows_.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        const double a = rows_[i][enter];
        if (a <= opt_.feasibility_tol) continue;
        const double ratio = std::max(rows_[i][rhs], 0.0) / a;
        if (leave == rows_.size()) {
          best = ratio;
          leave = i;
          continue;
        }
        const double slack = 1e-12 * (1.0 + best);
        if (ratio < best - slack || (ratio <= best + slack && basis_[i] < basis_[leave])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == rows_.size()) return false;
      pivot(leave, enter);
      if (++iterations_ > opt_.max_iterations)
        throw NoConvergence("simplex iteration limit reached", 0.0);
    }
  }

  double phase1_residual() const { return z_[width_ - 1] == 0.0 ? 0.0 : -z_[width_ - 1]; }

  // Pivots artificial variables out of the basis; rows where that is
  // impossible are linearly dependent and get dropped.
  void purge_artificials() {
    std::size_t i = 0;
    while (i < rows_.size()) {
      if (!is_artificial(basis_[i])) {
        ++i;
        continue;
      }
      std::size_t col = n_ + s_;
      double best = 1e-9;
      for (std::size_t j = 0; j < n_ + s_; ++j)
        if (std::fabs(rows_[i][j]) > best && !in_basis(j)) {
          best = std::fabs(rows_[i][j]);
          col = j;
        }
      if (col < n_ + s_) {
        pivot(i, col);
        ++i;
      } else {
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(i));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
        origin_.erase(origin_.begin() + static_cast<std::ptrdiff_t>(i));
        ++redundant_;
      }
    }
  }

  LpSolution extract(const std::vector<double>& cost, std::size_t num_eq) const {
    LpSolution sol;
    sol.x.assign(n_, 0.0);
    const std::size_t rhs = width_ - 1;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (basis_[i] < n_) {
        double v = rows_[i][rhs];
        if (v < 0.0 && v > -opt_.feasibility_tol) v = 0.0;
        sol.x[basis_[i]] = v;
      }
    }
    for (std::size_t j = 0; j < n_; ++j) sol.objective += cost[j] * sol.x[j];
    sol.basis = basis_;
    std::sort(sol.basis.begin(), sol.basis.end());

    // y_i = c_B B^{-1} e_i; the artificial column of row i holds B^{-1} e_i.
    std::vector<double> y(m_, 0.0);
    for (std::size_t row = 0; row < m_; ++row) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows_.size(); ++r) acc += cost[basis_[r]] * rows_[r][artificial(row)];
      y[row] = sign_[row] * acc;
    }
    sol.eq_duals.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(num_eq));
    sol.le_duals.assign(y.begin() + static_cast<std::ptrdiff_t>(num_eq), y.end());
    sol.iterations = iterations_;
    sol.redundant_rows = redundant_;
    return sol;
  }

  std::size_t structural_and_slack() const { return n_ + s_; }
  std::size_t columns() const { return width_ - 1; }

 private:
  bool in_basis(std::size_t col) const {
    return std::find(basis_.begin(), basis_.end(), col) != basis_.end();
  }

  void price(const std::vector<double>& cost) {
    z_.assign(width_, 0.0);
    std::copy(cost.begin(), cost.end(), z_.begin());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) kernels::axpy(-cb, rows_[i], z_);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    std::vector<double>& pr = rows_[r];
    const double inv = 1.0 / pr[c];
    for (double& v : pr) v *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (i == r) continue;
      const double f = rows_[i][c];
      if (f == 0.0) continue;
      kernels::axpy(-f, pr, rows_[i]);
      rows_[i][c] = 0.0;
    }
    const double f = z_[c];
    if (f != 0.0) {
      kernels::axpy(-f, pr, z_);
      z_[c] = 0.0;
    }
    basis_[r] = c;
  }

  SimplexOptions opt_;
  std::size_t n_, s_, m_, width_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> z_;
  std::vector<double> sign_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> origin_;
  std::size_t iterations_ = 0;
  std::size_t redundant_ = 0;
};

void check_shape(const LpProblem& p) {
  auto bad = [&](const std::vector<std::vector<double>>& rows, const std::vector<double>& rhs) {
    if (rows.size() != rhs.size()) return true;
    for (const auto& r : rows)
      if (r.size() != p.num_vars) return true;
    return false;
  };
  if (p.objective.size() != p.num_vars || bad(p.eq_rows, p.eq_rhs) || bad(p.le_rows, p.le_rhs))
    throw InvalidModel("LP row dimensions are inconsistent");
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& options) {
  check_shape(problem);
  Tableau t(problem, options);

  std::vector<double> phase1(t.columns(), 0.0);
  for (std::size_t j = t.structural_and_slack(); j < t.columns(); ++j) phase1[j] = 1.0;
  t.optimize(phase1, t.columns());
  if (t.phase1_residual() > options.phase1_tol)
    throw Infeasible("LP is infeasible (phase-1 residual " + std::to_string(t.phase1_residual()) + ")");
  t.purge_artificials();

  std::vector<double> phase2(t.columns(), 0.0);
  std::copy(problem.objective.begin(), problem.objective.end(), phase2.begin());
  if (!t.optimize(phase2, t.structural_and_slack())) throw Unbounded("LP is unbounded");
  return t.extract(phase2, problem.eq_rows.size());
}

std::optional<std::vector<double>> basic_solution(const LpProblem& p,
                                                  const std::vector<std::size_t>& basis) {
  const std::size_t n = p.num_vars;
  const std::size_t m = p.eq_rows.size() + p.le_rows.size();
  const std::size_t r = basis.size();
  if (r > m) return std::nullopt;
  // Augmented m x (r+1) system over the basic columns.
  std::vector<std::vector<double>> a(m, std::vector<double>(r + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const bool eq = i < p.eq_rows.size();
    const std::size_t li = i - p.eq_rows.size();
    for (std::size_t c = 0; c < r; ++c) {
      const std::size_t col = basis[c];
      if (col < n)
        a[i][c] = eq ? p.eq_rows[i][col] : p.le_rows[li][col];
      else if (!eq && col - n == li)
        a[i][c] = 1.0;
    }
    a[i][r] = eq ? p.eq_rhs[i] : p.le_rhs[li];
  }
  // Gaussian elimination with partial pivoting.
  std::vector<std::size_t> pivot_row(r);
  std::size_t row = 0;
  for (std::size_t c = 0; c < r; ++c) {
    std::size_t best = row;
    for (std::size_t i = row; i < m; ++i)
      if (std::fabs(a[i][c]) > std::fabs(a[best][c])) best = i;
    if (best >= m || std::fabs(a[best][c]) < 1e-12) return std::nullopt;
    std::swap(a[row], a[best]);
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row || a[i][c] == 0.0) continue;
      const double f = a[i][c] / a[row][c];
      kernels::axpy(-f, a[row], a[i]);
    }
    pivot_row[c] = row++;
  }
  for (std::size_t i = row; i < m; ++i)
    if (std::fabs(a[i][r]) > 1e-8) return std::nullopt;
  std::vector<double> x(n, 0.0);
  for (std::size_t c = 0; c < r; ++c)
    if (basis[c] < n) x[basis[c]] = a[pivot_row[c]][r] / a[pivot_row[c]][c];
  return x;
}

}  // namespace rmab
