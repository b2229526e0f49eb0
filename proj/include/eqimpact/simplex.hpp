#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "eqimpact/error.hpp"

namespace eqimpact::lp {

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Constraint {
  std::vector<double> coefficients;  // dense, one per variable
  Sense sense = Sense::kLessEqual;
  double rhs = 0;
};

// minimize  objective . x + objective_constant
// s.t.      each constraint,  0 <= x_j <= upper_bound_j
struct LinearProgram {
  std::vector<double> objective;
  double objective_constant = 0;
  std::vector<double> upper_bound;  // +inf for no bound
  std::vector<Constraint> constraints;

  std::size_t variable_count() const { return objective.size(); }

  // Value of the objective at x.
  double evaluate(const std::vector<double>& x) const {
    double s = objective_constant;
    for (std::size_t j = 0; j < x.size(); ++j) s += objective[j] * x[j];
    return s;
  }
  // Row activity a . x.
  static double activity(const Constraint& c, const std::vector<double>& x) {
    double s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) s += c.coefficients[j] * x[j];
    return s;
  }
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

struct Result {
  Status status = Status::kInfeasible;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  double phase1_infeasibility = 0;
};

struct Options {
  double pivot_tolerance = 1e-11;
  double feasibility_tolerance = 1e-9;
  std::size_t max_iterations = 1'000'000;
};

namespace detail {

// Dense tableau with one row per constraint plus a cost row. Columns are the
// structural variables followed by slack/surplus and artificial columns; the
// last column is the right-hand side.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }
  // Row `rows_` holds reduced costs; its rhs is minus the objective value.
  double& cost(std::size_t c) { return at(rows_, c); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

// Runs primal simplex with Bland's rule on columns [0, allowed_cols).
inline Status run_simplex(Tableau& t, std::vector<std::size_t>& basis, std::size_t allowed_cols,
                          const Options& opt, std::size_t& iterations) {
  while (true) {
    if (iterations >= opt.max_iterations) return Status::kIterationLimit;
    std::size_t enter = allowed_cols;
    for (std::size_t c = 0; c < allowed_cols; ++c) {
      if (t.cost(c) < -opt.pivot_tolerance) {
        enter = c;
        break;
      }
    }
    if (enter == allowed_cols) return Status::kOptimal;

    std::size_t leave = t.rows();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a <= opt.pivot_tolerance) continue;
      const double ratio = t.rhs(r) / a;
      if (leave == t.rows() || ratio < best_ratio - 1e-15 ||
          (std::abs(ratio - best_ratio) <= 1e-15 && basis[r] < basis[leave])) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave == t.rows()) return Status::kUnbounded;
    t.pivot(leave, enter);
    basis[leave] = enter;
    ++iterations;
  }
}

}  // namespace detail

// Two-phase dense simplex. Variable upper bounds become explicit rows.
// Pivoting follows Bland's rule (lowest-index entering column, lowest-index
// leaving basic variable on ratio ties), so the result is deterministic.
inline Result solve(const LinearProgram& problem, const Options& opt = {}) {
  const std::size_t n = problem.variable_count();
  if (problem.upper_bound.size() != n) throw ParameterError("upper_bound size must match variable count");
  for (const auto& c : problem.constraints) {
    if (c.coefficients.size() != n) throw ParameterError("constraint width must match variable count");
  }

  // Gather rows, including finite upper bounds.
  std::vector<Constraint> rows = problem.constraints;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isinf(problem.upper_bound[j])) continue;
    if (problem.upper_bound[j] < 0) {
      Result r;
      r.status = Status::kInfeasible;
      return r;
    }
    Constraint c;
    c.coefficients.assign(n, 0.0);
    c.coefficients[j] = 1.0;
    c.sense = Sense::kLessEqual;
    c.rhs = problem.upper_bound[j];
    rows.push_back(std::move(c));
  }
  // Normalize to rhs >= 0.
  for (auto& c : rows) {
    if (c.rhs < 0) {
      for (auto& a : c.coefficients) a = -a;
      c.rhs = -c.rhs;
      if (c.sense == Sense::kLessEqual) {
        c.sense = Sense::kGreaterEqual;
      } else if (c.sense == Sense::kGreaterEqual) {
        c.sense = Sense::kLessEqual;
      }
    }
  }

  const std::size_t m = rows.size();
  std::size_t slack_count = 0;
  std::size_t artificial_count = 0;
  for (const auto& c : rows) {
    if (c.sense != Sense::kEqual) ++slack_count;
    if (c.sense != Sense::kLessEqual) ++artificial_count;
  }
  const std::size_t real_cols = n + slack_count;
  const std::size_t cols = real_cols + artificial_count;
  detail::Tableau t(m, cols);
  std::vector<std::size_t> basis(m);

  std::size_t next_slack = n;
  std::size_t next_art = real_cols;
  for (std::size_t r = 0; r < m; ++r) {
    const auto& c = rows[r];
    for (std::size_t j = 0; j < n; ++j) t.at(r, j) = c.coefficients[j];
    t.rhs(r) = c.rhs;
    if (c.sense == Sense::kLessEqual) {
      t.at(r, next_slack) = 1.0;
      basis[r] = next_slack++;
    } else {
      if (c.sense == Sense::kGreaterEqual) t.at(r, next_slack++) = -1.0;
      t.at(r, next_art) = 1.0;
      basis[r] = next_art++;
    }
  }

  Result result;
  // Phase 1: minimize the sum of artificials.
  if (artificial_count > 0) {
    for (std::size_t c = 0; c <= cols; ++c) t.cost(c) = 0.0;
    for (std::size_t a = real_cols; a < cols; ++a) t.cost(a) = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] < real_cols) continue;
      for (std::size_t c = 0; c <= cols; ++c) t.cost(c) -= t.at(r, c);
    }
    const Status s = detail::run_simplex(t, basis, cols, opt, result.iterations);
    if (s == Status::kIterationLimit) {
      result.status = s;
      return result;
    }
    result.phase1_infeasibility = -t.cost(cols);
    if (result.phase1_infeasibility > opt.feasibility_tolerance) {
      result.status = Status::kInfeasible;
      return result;
    }
    // Drive remaining (zero-valued) artificials out of the basis.
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] < real_cols) continue;
      for (std::size_t c = 0; c < real_cols; ++c) {
        if (std::abs(t.at(r, c)) > opt.pivot_tolerance) {
          t.pivot(r, c);
          basis[r] = c;
          break;
        }
      }
      // A row that stays artificial is redundant; its artificial stays at zero
      // because phase 2 never lets artificial columns enter.
    }
  }

  // Phase 2: original objective, expressed in terms of the nonbasic columns.
  for (std::size_t c = 0; c <= cols; ++c) t.cost(c) = 0.0;
  for (std::size_t j = 0; j < n; ++j) t.cost(j) = problem.objective[j];
  for (std::size_t r = 0; r < m; ++r) {
    const double cb = basis[r] < n ? problem.objective[basis[r]] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) t.cost(c) -= cb * t.at(r, c);
  }
  const Status s = detail::run_simplex(t, basis, real_cols, opt, result.iterations);
  result.status = s;
  if (s != Status::kOptimal) return result;

  result.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < n) result.x[basis[r]] = std::max(0.0, t.rhs(r));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isinf(problem.upper_bound[j])) result.x[j] = std::min(result.x[j], problem.upper_bound[j]);
  }
  result.objective = problem.evaluate(result.x);
  return result;
}

}  // namespace eqimpact::lp
