#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "eqimpact/oracle.hpp"
#include "eqimpact/repair.hpp"
#include "test_support.hpp"

namespace eqimpact {
namespace {

using testing::histogram_with;
using testing::stats_from_counts;

RepairProblem random_problem(std::mt19937_64& rng, std::size_t groups, std::size_t buckets, double delta) {
  std::uniform_int_distribution<std::size_t> count(0, 25);
  std::vector<std::size_t> counts(groups * 2 * buckets * 2);
  for (auto& c : counts) c = count(rng);
  for (std::size_t a = 0; a < groups; ++a) counts[(a * 2 + 1) * buckets * 2] += 1;
  std::vector<double> values{1.0};
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (std::size_t z = 1; z < buckets; ++z) values.push_back(values.back() * u(rng));
  std::vector<std::string> names;
  for (std::size_t a = 0; a < groups; ++a) names.push_back("g" + std::to_string(a));
  return RepairProblem(stats_from_counts(names, buckets, counts), histogram_with(values), LossSpec{}, delta);
}

// Plain odometer over the whole grid; the reference the decomposed search must match.
oracle::GridResult naive_grid(const RepairProblem& problem, std::size_t levels) {
  const std::size_t n = problem.variable_count();
  std::vector<std::size_t> k(n, 0);
  oracle::GridResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<double> p(n);
  while (true) {
    for (std::size_t j = 0; j < n; ++j) p[j] = static_cast<double>(k[j]) / static_cast<double>(levels);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t a = 0; a < problem.group_count(); ++a) {
      const double i = oracle::impact(problem, p, a);
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
    if (hi - lo <= problem.delta() + oracle::kFeasibilityTolerance) {
      const double obj = oracle::objective(problem, p);
      if (obj < best.objective - 1e-13) {
        best.objective = obj;
        best.p = p;
      }
    }
    std::size_t j = n;
    while (j > 0 && k[j - 1] == levels) k[--j] = 0;
    if (j == 0) break;
    ++k[j - 1];
  }
  return best;
}

TEST(GridSearch, PerfectClassifierIsIdentity) {
  const auto s = stats_from_counts({"a", "b"}, 1, {3, 0, 0, 2, 5, 0, 0, 1});
  const RepairProblem problem(s, histogram_with({1.0}), LossSpec{}, 0.0);
  const auto r = oracle::grid_search(problem, {0.01});
  EXPECT_EQ(r.objective, 0.0);
  EXPECT_EQ(r.p, (std::vector<double>{0, 1, 0, 1}));
}

TEST(GridSearch, UnconstrainedSingleCellMatchesThreshold) {
  // One group, one bucket: each p sits at the endpoint that favors the
  // majority truth label of its cell.
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> count(1, 20);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<std::size_t> c = {count(rng), count(rng), count(rng), count(rng)};
    const auto s = stats_from_counts({"a"}, 1, c);
    const RepairProblem problem(s, histogram_with({1.0}), LossSpec{},
                                std::numeric_limits<double>::infinity());
    const auto r = oracle::grid_search(problem, {0.01});
    const double total = static_cast<double>(c[0] + c[1] + c[2] + c[3]);
    double expected = 0;
    for (int d = 0; d < 2; ++d) {
      const auto neg = c[static_cast<std::size_t>(d)];      // truth 0, decision d
      const auto pos = c[2 + static_cast<std::size_t>(d)];  // truth 1, decision d
      expected += static_cast<double>(std::min(neg, pos)) / total;
      if (pos != neg) EXPECT_EQ(r.p[static_cast<std::size_t>(d)], pos > neg ? 1.0 : 0.0);
    }
    EXPECT_NEAR(r.objective, expected, 1e-12);
  }
}

TEST(GridSearch, MatchesNaiveEnumeration) {
  std::mt19937_64 rng(2);
  struct Shape {
    std::size_t groups, buckets;
    double step;
  };
  for (const auto& shape : {Shape{2, 2, 0.25}, Shape{2, 1, 0.1}, Shape{3, 1, 0.2}, Shape{4, 1, 0.5},
                            Shape{1, 3, 0.25}}) {
    for (int trial = 0; trial < 6; ++trial) {
      const double delta = trial % 3 == 0 ? 0.0 : 0.03 * trial;
      const auto problem = random_problem(rng, shape.groups, shape.buckets, delta);
      const auto fast = oracle::grid_search(problem, {shape.step});
      const auto slow = naive_grid(problem, static_cast<std::size_t>(std::round(1 / shape.step)));
      EXPECT_NEAR(fast.objective, slow.objective, 1e-12);
    }
  }
}

TEST(GridSearch, FormulasAgreeWithRepairPath) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto problem = random_problem(rng, 2 + trial % 2, 2, 0.0);
    std::vector<double> p(problem.variable_count());
    for (auto& x : p) x = u(rng);
    EXPECT_NEAR(oracle::objective(problem, p), expected_loss(problem, p), 1e-12);
    EXPECT_NEAR(oracle::objective(problem, p), build_lp(problem).evaluate(p), 1e-12);
    for (std::size_t a = 0; a < problem.group_count(); ++a) {
      EXPECT_NEAR(oracle::impact(problem, p, a), repaired_impact(problem, p, a), 1e-12);
    }
  }
}

TEST(GridSearch, TwoByTwoBracketsLpOptimum) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const auto problem = random_problem(rng, 2, 2, 0.02);
    const auto lp = solve(problem);
    ASSERT_EQ(lp.status, SolveStatus::kOptimal);
    const auto grid = oracle::grid_search(problem, {0.01});
    EXPECT_GE(grid.objective, lp.objective - 1e-12);
    EXPECT_LE(grid.objective, lp.objective + 1e-3);
    EXPECT_LE(std::abs(grid.impacts[1] - grid.impacts[0]), 0.02 + 1e-12);
  }
}

TEST(GridSearch, Guards) {
  std::mt19937_64 rng(5);
  const auto problem = random_problem(rng, 2, 2, 0.0);
  EXPECT_THROW(oracle::grid_search(problem, {0.03}), ParameterError);
  EXPECT_THROW(oracle::grid_search(problem, {0.0}), ParameterError);
  EXPECT_THROW(oracle::grid_search(problem, {1.5}), ParameterError);
  const auto big = random_problem(rng, 3, 2, 0.0);
  EXPECT_THROW(oracle::grid_search(big, {0.5}), ParameterError);
  oracle::GridSpec tight{0.01};
  tight.max_points_per_group = 1e6;
  EXPECT_THROW(oracle::grid_search(problem, tight), ParameterError);
}

}  // namespace
}  // namespace eqimpact
