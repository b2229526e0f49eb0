#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "eqimpact/error.hpp"
#include "eqimpact/stats.hpp"
#include "eqimpact/utility.hpp"

// Brute-force grid search over mixing tables, used to check the simplex
// solution of the repair program on small instances. Shares only the problem
// types with the LP path; every loss and impact formula is re-derived here.

namespace eqimpact::oracle {

struct GridSpec {
  double step = 0.01;
  std::size_t max_variables = 8;
  // Bound on grid points enumerated for a single group.
  double max_points_per_group = 1e9;
  // Bound on candidate points kept after pruning, summed over groups.
  std::size_t max_candidates = 50'000'000;
};

struct GridResult {
  std::vector<double> p;        // (group, bucket, base decision) order
  double objective = 0;         // expected loss at p
  std::vector<double> impacts;  // bucketized impact per group at p
  std::size_t candidates = 0;   // points surviving the incumbent bound
};

// Feasibility slack on max_a I(a) - min_a I(a) - delta.
inline constexpr double kFeasibilityTolerance = 1e-14;

namespace detail {

// Per-variable tables of the group's loss and impact contribution at each grid level.
struct GroupTables {
  std::size_t vars = 0;
  std::vector<std::vector<double>> loss;    // [var][k]
  std::vector<std::vector<double>> impact;  // [var][k]
  std::vector<double> min_loss;             // [var]
};

inline GroupTables tables_for(const ConditionalStats& s, const HistogramUtility& h, const LossSpec& loss,
                              std::size_t a, std::size_t levels) {
  GroupTables t;
  t.vars = h.size() * 2;
  for (std::size_t z = 0; z < h.size(); ++z) {
    for (int d = 0; d < 2; ++d) {
      std::vector<double> lt(levels + 1);
      std::vector<double> it(levels + 1);
      for (std::size_t k = 0; k <= levels; ++k) {
        const double grant = static_cast<double>(k) / static_cast<double>(levels);
        double l = 0;
        for (int y = 0; y < 2; ++y) {
          const double mass = s.weight(a, y) * s.joint(a, y, z, d);
          l += mass * grant * loss.loss(1, y) + mass * (1 - grant) * loss.loss(0, y);
        }
        lt[k] = l;
        it[k] = (1 - grant) * s.joint(a, 1, z, d) * h.values()[z];
      }
      t.min_loss.push_back(*std::min_element(lt.begin(), lt.end()));
      t.loss.push_back(std::move(lt));
      t.impact.push_back(std::move(it));
    }
  }
  return t;
}

struct Point {
  double impact;
  double loss;
  std::uint64_t rank;  // lexicographic rank of the level vector within its group
};

// Enumerates, depth first, every grid point of one group whose loss is <= threshold.
class GroupEnumerator {
 public:
  GroupEnumerator(const GroupTables& t, std::size_t levels, double threshold, std::vector<Point>& out,
                  std::size_t max_candidates)
      : t_(t), levels_(levels), threshold_(threshold), out_(out), max_candidates_(max_candidates),
        rest_(t.vars + 1, 0.0) {
    // rest_[j]: least loss reachable by vars [j, vars).
    for (std::size_t j = t.vars; j-- > 0;) rest_[j] = rest_[j + 1] + t.min_loss[j];
  }

  void run() { visit(0, 0.0, 0.0, 0); }

 private:
  void visit(std::size_t j, double loss, double impact, std::uint64_t rank) {
    if (j == t_.vars) {
      out_.push_back({impact, loss, rank});
      if (out_.size() > max_candidates_) throw Error("grid oracle candidate set exceeds its memory bound");
      return;
    }
    for (std::size_t k = 0; k <= levels_; ++k) {
      const double l = loss + t_.loss[j][k];
      if (l + rest_[j + 1] > threshold_) continue;
      visit(j + 1, l, impact + t_.impact[j][k], rank * (levels_ + 1) + k);
    }
  }

  const GroupTables& t_;
  std::size_t levels_;
  double threshold_;
  std::vector<Point>& out_;
  std::size_t max_candidates_;
  std::vector<double> rest_;
};

inline std::vector<std::size_t> unrank(std::uint64_t rank, std::size_t vars, std::size_t levels) {
  std::vector<std::size_t> k(vars);
  for (std::size_t j = vars; j-- > 0;) {
    k[j] = static_cast<std::size_t>(rank % (levels + 1));
    rank /= levels + 1;
  }
  return k;
}

inline std::size_t levels_for(double step) {
  if (!(step > 0) || !(step <= 1)) throw ParameterError("grid step must lie in (0, 1]");
  const double inv = 1.0 / step;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-9 * rounded) throw ParameterError("grid step must divide 1 evenly");
  return static_cast<std::size_t>(rounded);
}

}  // namespace detail

// Expected loss of mixing table p, summed cell by cell.
template <class Problem>
double objective(const Problem& problem, const std::vector<double>& p) {
  const auto& s = problem.stats();
  const std::size_t nb = problem.histogram().size();
  double total = 0;
  std::size_t i = 0;
  for (std::size_t a = 0; a < s.group_count(); ++a) {
    for (std::size_t z = 0; z < nb; ++z) {
      for (int d = 0; d < 2; ++d, ++i) {
        for (int y = 0; y < 2; ++y) {
          const double mass = s.weight(a, y) * s.joint(a, y, z, d);
          total += mass * p[i] * problem.loss().loss(1, y) + mass * (1 - p[i]) * problem.loss().loss(0, y);
        }
      }
    }
  }
  return total;
}

// Utility-weighted denial mass of qualified members of group a under p.
template <class Problem>
double impact(const Problem& problem, const std::vector<double>& p, std::size_t a) {
  const auto& s = problem.stats();
  const auto& h = problem.histogram();
  double total = 0;
  for (std::size_t z = 0; z < h.size(); ++z) {
    for (int d = 0; d < 2; ++d) {
      total += (1 - p[(a * h.size() + z) * 2 + d]) * s.joint(a, 1, z, d) * h.values()[z];
    }
  }
  return total;
}

// Exact minimum of the expected loss over the grid {0, step, ..., 1}^vars
// subject to |I(a) - I(b)| <= delta for every pair of groups. The objective
// separates by group and the constraints only bound the spread of the group
// impacts, so each group's grid is enumerated on its own (pruned by an
// incumbent bound) and groups are joined by sliding-window minima over a
// common impact band. Ties go to the lexicographically smallest table.
template <class Problem>
GridResult grid_search(const Problem& problem, const GridSpec& grid = {}) {
  const auto& s = problem.stats();
  const auto& h = problem.histogram();
  const std::size_t levels = detail::levels_for(grid.step);
  const std::size_t g = s.group_count();
  const std::size_t vars_per_group = h.size() * 2;
  if (g * vars_per_group > grid.max_variables) {
    throw ParameterError("grid oracle limited to " + std::to_string(grid.max_variables) + " variables");
  }
  if (std::pow(static_cast<double>(levels + 1), static_cast<double>(vars_per_group)) > grid.max_points_per_group) {
    throw ParameterError("grid too fine: per-group point count exceeds the guard");
  }
  const double delta = problem.delta();

  std::vector<detail::GroupTables> tables;
  for (std::size_t a = 0; a < g; ++a) tables.push_back(detail::tables_for(s, h, problem.loss(), a, levels));

  // Incumbent: always grant (every impact is zero, so it is feasible), improved
  // by the optimum of a nested coarser grid when one exists.
  double incumbent = 0;
  for (const auto& t : tables) {
    for (std::size_t j = 0; j < t.vars; ++j) incumbent += t.loss[j][levels];
  }
  if (levels % 10 == 0 && levels > 10) {
    GridSpec coarse = grid;
    coarse.step = 10.0 / static_cast<double>(levels);
    incumbent = std::min(incumbent, grid_search(problem, coarse).objective);
  }
  // Guard against the incumbent's own rounding.
  incumbent += 1e-12 * (1 + std::abs(incumbent));

  std::vector<std::vector<detail::Point>> points(g);
  std::size_t candidates = 0;
  for (std::size_t a = 0; a < g; ++a) {
    double others = 0;
    for (std::size_t b = 0; b < g; ++b) {
      if (b == a) continue;
      for (double m : tables[b].min_loss) others += m;
    }
    detail::GroupEnumerator(tables[a], levels, incumbent - others, points[a], grid.max_candidates - candidates).run();
    candidates += points[a].size();
  }
  for (auto& pts : points) {
    std::sort(pts.begin(), pts.end(), [](const detail::Point& x, const detail::Point& y) {
      return x.impact < y.impact || (x.impact == y.impact && x.rank < y.rank);
    });
  }

  // A table is feasible iff every group's impact lies in one band
  // [t, t + delta]. Sweep t over all candidate impacts in increasing order;
  // each group keeps a monotone deque of its cheapest point inside the band.
  std::vector<double> starts;
  for (const auto& pts : points) {
    for (const auto& x : pts) starts.push_back(x.impact);
  }
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  struct Window {
    std::size_t next = 0;
    std::deque<std::size_t> dq;
  };
  std::vector<Window> windows(g);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> best_ranks;
  std::vector<std::uint64_t> ranks(g);
  for (const double t : starts) {
    const double hi = t + delta + kFeasibilityTolerance;
    double total = 0;
    bool feasible = true;
    for (std::size_t a = 0; a < g; ++a) {
      auto& w = windows[a];
      const auto& pts = points[a];
      while (w.next < pts.size() && pts[w.next].impact <= hi) {
        const auto& x = pts[w.next];
        while (!w.dq.empty()) {
          const auto& back = pts[w.dq.back()];
          if (back.loss > x.loss || (back.loss == x.loss && back.rank > x.rank)) {
            w.dq.pop_back();
          } else {
            break;
          }
        }
        w.dq.push_back(w.next++);
      }
      while (!w.dq.empty() && pts[w.dq.front()].impact < t) w.dq.pop_front();
      if (w.dq.empty()) {
        feasible = false;
        break;
      }
      total += pts[w.dq.front()].loss;
      ranks[a] = pts[w.dq.front()].rank;
    }
    if (!feasible) continue;
    if (total < best || (total == best && ranks < best_ranks)) {
      best = total;
      best_ranks = ranks;
    }
  }
  if (best_ranks.empty()) throw Error("grid oracle found no feasible point");

  GridResult result;
  result.candidates = candidates;
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t k : detail::unrank(best_ranks[a], vars_per_group, levels)) {
      result.p.push_back(static_cast<double>(k) / static_cast<double>(levels));
    }
  }
  result.objective = objective(problem, result.p);
  for (std::size_t a = 0; a < g; ++a) result.impacts.push_back(impact(problem, result.p, a));
  return result;
}

}  // namespace eqimpact::oracle
