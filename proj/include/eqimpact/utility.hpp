#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "eqimpact/dataset.hpp"
#include "eqimpact/error.hpp"

namespace eqimpact {

// Marginal utility of a loan as a function of income, on a finite domain
// [lo, hi]. Evaluation outside the domain clamps to the nearest endpoint.
//
// Construction samples the function on a dense grid and rejects anything that
// is negative, non-finite or increasing anywhere on that grid.
class UtilityFunction {
 public:
  static constexpr std::size_t kCheckPoints = 4097;

  UtilityFunction(std::function<double(double)> fn, double lo, double hi);

  double operator()(double income) const { return fn_(std::clamp(income, lo_, hi_)); }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  // Supremum over the domain; attained at lo() because the function is nonincreasing.
  double sup() const { return fn_(lo_); }

  static UtilityFunction constant(double value, double lo, double hi);
  // 1/x, the marginal utility of log-wealth.
  static UtilityFunction reciprocal(double lo, double hi);
  // Piecewise-linear interpolation through (income, utility) points. Incomes
  // must be strictly increasing and utilities nonincreasing.
  static UtilityFunction tabulated(std::vector<std::pair<double, double>> points);

 private:
  std::function<double(double)> fn_;
  double lo_;
  double hi_;
};

inline UtilityFunction::UtilityFunction(std::function<double(double)> fn, double lo, double hi)
    : fn_(std::move(fn)), lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo > 0) || !(lo < hi)) {
    throw UtilityError("utility domain must satisfy 0 < lo < hi");
  }
  double prev = fn_(lo_);
  for (std::size_t i = 0; i < kCheckPoints; ++i) {
    const double x = i + 1 == kCheckPoints ? hi_ : lo_ + (hi_ - lo_) * static_cast<double>(i) / (kCheckPoints - 1);
    const double y = fn_(x);
    if (!std::isfinite(y)) throw UtilityError("utility is not finite at income " + detail::format_exact(x));
    if (y < 0) throw UtilityError("utility is negative at income " + detail::format_exact(x));
    if (y > prev) throw UtilityError("utility increases at income " + detail::format_exact(x));
    prev = y;
  }
}

inline UtilityFunction UtilityFunction::constant(double value, double lo, double hi) {
  return UtilityFunction([value](double) { return value; }, lo, hi);
}

inline UtilityFunction UtilityFunction::reciprocal(double lo, double hi) {
  return UtilityFunction([](double x) { return 1.0 / x; }, lo, hi);
}

inline UtilityFunction UtilityFunction::tabulated(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw UtilityError("utility table needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [x, y] = points[i];
    if (!std::isfinite(x) || !std::isfinite(y) || x <= 0 || y < 0) {
      throw UtilityError("utility table entries must be finite, income > 0, utility >= 0");
    }
    if (i > 0 && !(x > points[i - 1].first)) throw UtilityError("utility table incomes must be strictly increasing");
    if (i > 0 && y > points[i - 1].second) throw UtilityError("utility table must be nonincreasing in income");
  }
  const double lo = points.front().first;
  const double hi = points.back().first;
  auto table = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(points));
  return UtilityFunction(
      [table](double x) {
        const auto& t = *table;
        auto it = std::upper_bound(t.begin(), t.end(), x,
                                   [](double v, const std::pair<double, double>& p) { return v < p.first; });
        if (it == t.begin()) return t.front().second;
        if (it == t.end()) return t.back().second;
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        const double w = (x - x0) / (x1 - x0);
        // Clamp keeps the interpolant inside [y1, y0] despite rounding.
        return std::clamp(y0 + w * (y1 - y0), y1, y0);
      },
      lo, hi);
}

// Reads an `income,utility` CSV table with a header row.
inline UtilityFunction load_utility_table(std::istream& in) {
  std::string line;
  if (!detail::read_line(in, line)) throw UtilityError("empty utility table");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  std::size_t income_col = header.size();
  std::size_t utility_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (detail::trim(header[i]) == "income") income_col = i;
    if (detail::trim(header[i]) == "utility") utility_col = i;
  }
  if (income_col == header.size() || utility_col == header.size()) {
    throw SchemaError("utility table needs 'income' and 'utility' columns");
  }
  std::vector<std::pair<double, double>> points;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() <= std::max(income_col, utility_col)) throw RowError(line_no, "missing fields");
    const auto x = detail::parse_double(fields[income_col]);
    const auto y = detail::parse_double(fields[utility_col]);
    if (!x || !y) throw RowError(line_no, "non-numeric utility table entry");
    points.emplace_back(*x, *y);
  }
  return UtilityFunction::tabulated(std::move(points));
}

// Rescales psi so that its supremum over the domain is 1.
inline UtilityFunction normalize(const UtilityFunction& psi) {
  const double s = psi.sup();
  if (!(s > 0)) throw UtilityError("utility is identically zero on its domain");
  return UtilityFunction([psi, s](double x) { return psi(x) / s; }, psi.lo(), psi.hi());
}

// Piecewise-constant approximation of a normalized utility with bucket
// breakpoints z_0 = lo < z_1 < ... and values v_i = psi(z_i). Buckets are
// half-open, [z_i, z_{i+1}), and the last one extends to +inf.
class HistogramUtility {
 public:
  HistogramUtility(std::vector<double> breakpoints, std::vector<double> values, double epsilon, double lo,
                   double hi);

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double epsilon() const noexcept { return epsilon_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return values_.size(); }

  // Incomes below the first breakpoint map to bucket 0.
  std::size_t bucket_of(double income) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), income);
    return it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  }

  double operator()(double income) const { return values_[bucket_of(income)]; }

  // Same buckets with every value multiplied by `factor` > 0.
  HistogramUtility scaled(double factor) const;

  // The step function itself, as a UtilityFunction on [lo, hi].
  UtilityFunction as_function() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double epsilon_;
  double lo_;
  double hi_;
};

inline HistogramUtility::HistogramUtility(std::vector<double> breakpoints, std::vector<double> values,
                                          double epsilon, double lo, double hi)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)), epsilon_(epsilon), lo_(lo), hi_(hi) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw UtilityError("histogram needs one value per breakpoint");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || !std::isfinite(values_[i]) || values_[i] < 0) {
      throw UtilityError("histogram entries must be finite with nonnegative values");
    }
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1])) {
      throw UtilityError("histogram breakpoints must be strictly increasing");
    }
    if (i > 0 && !(values_[i] < values_[i - 1])) {
      throw UtilityError("histogram values must be strictly decreasing");
    }
  }
}

inline HistogramUtility HistogramUtility::scaled(double factor) const {
  if (!(factor > 0) || !std::isfinite(factor)) throw ParameterError("scale factor must be positive");
  std::vector<double> v = values_;
  for (auto& x : v) x *= factor;
  return HistogramUtility(breakpoints_, std::move(v), epsilon_, lo_, hi_);
}

inline UtilityFunction HistogramUtility::as_function() const {
  auto self = std::make_shared<const HistogramUtility>(*this);
  return UtilityFunction([self](double x) { return (*self)(x); }, lo_, hi_);
}

namespace detail {

// Least double z in (lo, hi] with psi(z) <= level, given psi(lo) > level >= psi(hi).
inline double bisect_crossing(const UtilityFunction& psi, double level, double lo, double hi) {
  while (true) {
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) return hi;
    if (psi(mid) <= level) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
}

}  // namespace detail

// Level-crossing histogram: z_k is the least income at which psi drops to the
// next level 1 - k*eps below the previous bucket's value. On every bucket
// 0 <= psi(z_i) - psi(b) <= eps.
inline HistogramUtility build_histogram(const UtilityFunction& psi, double epsilon) {
  if (!(epsilon > 0) || !(epsilon < 1)) throw ParameterError("epsilon must lie in (0, 1)");
  if (std::abs(psi.sup() - 1.0) > 1e-12) throw UtilityError("build_histogram expects a normalized utility");

  std::vector<double> breakpoints{psi.lo()};
  std::vector<double> values{psi(psi.lo())};
  const double tail = psi(psi.hi());
  while (true) {
    const double v = values.back();
    auto k = static_cast<long long>(std::floor((1.0 - v) / epsilon)) + 1;
    while (1.0 - static_cast<double>(k) * epsilon >= v) ++k;
    const double level = 1.0 - static_cast<double>(k) * epsilon;
    if (level < 0 || tail > level) break;
    const double z = detail::bisect_crossing(psi, level, breakpoints.back(), psi.hi());
    breakpoints.push_back(z);
    values.push_back(psi(z));
  }
  return HistogramUtility(std::move(breakpoints), std::move(values), epsilon, psi.lo(), psi.hi());
}

}  // namespace eqimpact
