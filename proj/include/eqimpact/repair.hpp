#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqimpact/dataset.hpp"
#include "eqimpact/error.hpp"
#include "eqimpact/metrics.hpp"
#include "eqimpact/random.hpp"
#include "eqimpact/simplex.hpp"
#include "eqimpact/stats.hpp"
#include "eqimpact/utility.hpp"

namespace eqimpact {

inline constexpr double kDefaultDelta = 1e-6;
// Residual slack allowed on top of delta when checking a solved program.
inline constexpr double kSolverTolerance = 1e-9;

// Inputs of the repair program.
class RepairProblem {
 public:
  RepairProblem(ConditionalStats stats, HistogramUtility h, LossSpec loss = {}, double delta = kDefaultDelta)
      : stats_(std::move(stats)), h_(std::move(h)), loss_(loss), delta_(delta) {
    if (!(delta_ >= 0) || std::isnan(delta_)) throw ParameterError("delta must be >= 0");
    if (stats_.bucket_count() != h_.size()) throw ParameterError("stats and histogram have different bucket sets");
    for (std::size_t a = 0; a < stats_.group_count(); ++a) {
      if (stats_.stratum_empty(a, 1)) {
        throw DatasetError("group '" + stats_.groups()[a] + "' has no qualified records");
      }
    }
  }

  const ConditionalStats& stats() const noexcept { return stats_; }
  const HistogramUtility& histogram() const noexcept { return h_; }
  const LossSpec& loss() const noexcept { return loss_; }
  double delta() const noexcept { return delta_; }
  std::size_t group_count() const noexcept { return stats_.group_count(); }
  std::size_t bucket_count() const noexcept { return h_.size(); }
  std::size_t variable_count() const noexcept { return group_count() * bucket_count() * 2; }

  // Decision variable p(a, z, d) = Pr[repaired = 1 | group a, bucket z, base decision d].
  std::size_t variable(std::size_t a, std::size_t z, int d) const {
    return (a * bucket_count() + z) * 2 + static_cast<std::size_t>(d);
  }

 private:
  ConditionalStats stats_;
  HistogramUtility h_;
  LossSpec loss_;
  double delta_;
};

// Expected loss of the derived classifier with mixing table p.
inline double expected_loss(const RepairProblem& problem, const std::vector<double>& p) {
  const auto& s = problem.stats();
  double total = 0;
  for (std::size_t a = 0; a < problem.group_count(); ++a) {
    for (int y = 0; y < 2; ++y) {
      for (std::size_t z = 0; z < problem.bucket_count(); ++z) {
        for (int d = 0; d < 2; ++d) {
          const double mass = s.weight(a, y) * s.joint(a, y, z, d);
          const double grant = p[problem.variable(a, z, d)];
          total += mass * (grant * problem.loss().loss(1, y) + (1 - grant) * problem.loss().loss(0, y));
        }
      }
    }
  }
  return total;
}

// Bucketized impact of group a under mixing table p.
inline double repaired_impact(const RepairProblem& problem, const std::vector<double>& p, std::size_t a) {
  const auto& s = problem.stats();
  double impact = 0;
  for (std::size_t z = 0; z < problem.bucket_count(); ++z) {
    double denied = 0;
    for (int d = 0; d < 2; ++d) denied += s.joint(a, 1, z, d) * (1 - p[problem.variable(a, z, d)]);
    impact += problem.histogram().values()[z] * denied;
  }
  return impact;
}

// |I(b) - I(a)| for every pair a < b, in lexicographic pair order.
inline std::vector<double> impact_residuals(const RepairProblem& problem, const std::vector<double>& p) {
  std::vector<double> impacts;
  for (std::size_t a = 0; a < problem.group_count(); ++a) impacts.push_back(repaired_impact(problem, p, a));
  std::vector<double> out;
  for (std::size_t a = 0; a < impacts.size(); ++a) {
    for (std::size_t b = a + 1; b < impacts.size(); ++b) out.push_back(std::abs(impacts[b] - impacts[a]));
  }
  return out;
}

// The repair program in standard form. Variables are p(a, z, d) in [0, 1];
// rows come in pairs for every group pair a < b:
//   I(b) - I(a) <= delta   and   I(b) - I(a) >= -delta.
inline lp::LinearProgram build_lp(const RepairProblem& problem) {
  const auto& s = problem.stats();
  const auto& v = problem.histogram().values();
  const std::size_t n = problem.variable_count();
  lp::LinearProgram program;
  program.objective.assign(n, 0.0);
  program.upper_bound.assign(n, 1.0);

  for (std::size_t a = 0; a < problem.group_count(); ++a) {
    for (std::size_t z = 0; z < problem.bucket_count(); ++z) {
      for (int d = 0; d < 2; ++d) {
        for (int y = 0; y < 2; ++y) {
          const double mass = s.weight(a, y) * s.joint(a, y, z, d);
          program.objective[problem.variable(a, z, d)] +=
              mass * (problem.loss().loss(1, y) - problem.loss().loss(0, y));
          program.objective_constant += mass * problem.loss().loss(0, y);
        }
      }
    }
  }

  // I(a) = K_a - sum_{z,d} v_z * joint(a,1,z,d) * p(a,z,d)
  auto impact_offset = [&](std::size_t a) {
    double k = 0;
    for (std::size_t z = 0; z < problem.bucket_count(); ++z) {
      for (int d = 0; d < 2; ++d) k += v[z] * s.joint(a, 1, z, d);
    }
    return k;
  };
  if (std::isinf(problem.delta())) return program;
  for (std::size_t a = 0; a < problem.group_count(); ++a) {
    for (std::size_t b = a + 1; b < problem.group_count(); ++b) {
      std::vector<double> row(n, 0.0);
      for (std::size_t z = 0; z < problem.bucket_count(); ++z) {
        for (int d = 0; d < 2; ++d) {
          row[problem.variable(b, z, d)] -= v[z] * s.joint(b, 1, z, d);
          row[problem.variable(a, z, d)] += v[z] * s.joint(a, 1, z, d);
        }
      }
      const double offset = impact_offset(b) - impact_offset(a);
      program.constraints.push_back({row, lp::Sense::kLessEqual, problem.delta() - offset});
      program.constraints.push_back({std::move(row), lp::Sense::kGreaterEqual, -problem.delta() - offset});
    }
  }
  return program;
}

// Randomized post-processed classifier: outputs 1 with probability
// p(group, bucket_of(income), base decision).
class DerivedClassifier {
 public:
  DerivedClassifier(std::vector<std::string> groups, HistogramUtility h, std::vector<double> p)
      : groups_(std::move(groups)), h_(std::move(h)), p_(std::move(p)) {
    if (groups_.empty()) throw ParameterError("classifier needs at least one group");
    if (p_.size() != groups_.size() * h_.size() * 2) throw ParameterError("mixing table has wrong size");
    for (double x : p_) {
      if (!(x >= 0 && x <= 1)) throw ParameterError("mixing probabilities must lie in [0, 1]");
    }
  }

  // p(a, z, d) = d: reproduces the base classifier.
  static DerivedClassifier identity(std::vector<std::string> groups, HistogramUtility h) {
    std::vector<double> p(groups.size() * h.size() * 2);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i % 2);
    return DerivedClassifier(std::move(groups), std::move(h), std::move(p));
  }

  static DerivedClassifier always_grant(std::vector<std::string> groups, HistogramUtility h) {
    std::vector<double> p(groups.size() * h.size() * 2, 1.0);
    return DerivedClassifier(std::move(groups), std::move(h), std::move(p));
  }

  const std::vector<std::string>& groups() const noexcept { return groups_; }
  const HistogramUtility& histogram() const noexcept { return h_; }
  const std::vector<double>& table() const noexcept { return p_; }

  double probability(std::size_t a, std::size_t z, int d) const { return p_[(a * h_.size() + z) * 2 + d]; }

  std::size_t group_index(const std::string& group) const {
    const auto it = std::find(groups_.begin(), groups_.end(), group);
    if (it == groups_.end()) throw ParameterError("unknown group '" + group + "'");
    return static_cast<std::size_t>(it - groups_.begin());
  }

  double acceptance_probability(const std::string& group, double income, int base_decision) const {
    return probability(group_index(group), h_.bucket_of(income), base_decision);
  }

  // One randomized decision; consumes exactly one draw from `rng`.
  int apply(const std::string& group, double income, int base_decision, RandomStream& rng) const {
    if (base_decision != 0 && base_decision != 1) throw ParameterError("base decision must be 0 or 1");
    const double prob = acceptance_probability(group, income, base_decision);
    return bernoulli(rng, prob) ? 1 : 0;
  }

 private:
  std::vector<std::string> groups_;
  HistogramUtility h_;
  std::vector<double> p_;
};

enum class SolveStatus { kOptimal, kInfeasible, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

struct LpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<double> p;           // mixing table, indexed like RepairProblem::variable
  double objective = 0;            // expected loss
  std::vector<double> residuals;   // |I(b) - I(a)| per group pair a < b
  std::size_t iterations = 0;
  std::string diagnostics;
};

// Solves a program built by build_lp(problem). Cells with no probability mass
// in either truth stratum do not affect objective or constraints; they are
// reset to the identity p(a, z, d) = d.
inline LpSolution solve(const RepairProblem& problem, const lp::LinearProgram& program) {
  LpSolution out;
  const auto result = lp::solve(program);
  out.iterations = result.iterations;
  if (result.status != lp::Status::kOptimal) {
    // Always-grant (p = 1) zeroes every impact, so a valid program is never
    // infeasible; reaching here means the arithmetic broke down.
    out.status = SolveStatus::kNumericalFailure;
    out.diagnostics = std::string("simplex returned ") + lp::to_string(result.status) +
                      " (phase-1 infeasibility " + detail::format_exact(result.phase1_infeasibility) + ")";
    return out;
  }
  out.p = result.x;
  const auto& s = problem.stats();
  for (std::size_t a = 0; a < problem.group_count(); ++a) {
    for (std::size_t z = 0; z < problem.bucket_count(); ++z) {
      for (int d = 0; d < 2; ++d) {
        double& p = out.p[problem.variable(a, z, d)];
        p = std::clamp(p, 0.0, 1.0);
        if (s.weight(a, 0) * s.joint(a, 0, z, d) == 0 && s.weight(a, 1) * s.joint(a, 1, z, d) == 0) {
          p = static_cast<double>(d);
        }
      }
    }
  }
  out.objective = expected_loss(problem, out.p);
  out.residuals = impact_residuals(problem, out.p);
  const double worst = out.residuals.empty() ? 0.0 : *std::max_element(out.residuals.begin(), out.residuals.end());
  if (worst > problem.delta() + kSolverTolerance) {
    out.status = SolveStatus::kNumericalFailure;
    out.diagnostics = "impact residual " + detail::format_exact(worst) + " exceeds delta";
    return out;
  }
  out.status = SolveStatus::kOptimal;
  return out;
}

inline LpSolution solve(const RepairProblem& problem) { return solve(problem, build_lp(problem)); }

inline DerivedClassifier to_classifier(const RepairProblem& problem, const LpSolution& solution) {
  if (solution.status != SolveStatus::kOptimal) throw Error("cannot build a classifier from a failed solve");
  return DerivedClassifier(problem.stats().groups(), problem.histogram(), solution.p);
}

// Distribution of (repaired decision, bucket) given (group, truth) induced by
// mixing table p, computed analytically from the base stats.
inline ConditionalStats induced_stats(const RepairProblem& problem, const std::vector<double>& p) {
  const auto& s = problem.stats();
  const std::size_t g = problem.group_count();
  const std::size_t nb = problem.bucket_count();
  std::vector<double> joint(g * 2 * nb * 2, 0.0);
  std::vector<double> weight(g * 2);
  std::vector<double> positive(g, 0.0);
  std::vector<std::size_t> counts(g * 2);
  for (std::size_t a = 0; a < g; ++a) {
    for (int y = 0; y < 2; ++y) {
      weight[a * 2 + y] = s.weight(a, y);
      counts[a * 2 + y] = s.count(a, y);
      double granted = 0;
      for (std::size_t z = 0; z < nb; ++z) {
        double grant = 0;
        double deny = 0;
        for (int d = 0; d < 2; ++d) {
          const double q = p[problem.variable(a, z, d)];
          grant += s.joint(a, y, z, d) * q;
          deny += s.joint(a, y, z, d) * (1 - q);
        }
        joint[s.index(a, y, z, 1)] = grant;
        joint[s.index(a, y, z, 0)] = deny;
        granted += grant;
      }
      positive[a] += s.truth_rate(a, y) * granted;
    }
    positive[a] = std::clamp(positive[a], 0.0, 1.0);
  }
  return ConditionalStats(s.groups(), nb, std::move(joint), std::move(weight), std::move(positive),
                          std::move(counts));
}

// Expected exact (unbucketized) impact of group a under the derived classifier:
// mean over qualified records of Pr[repaired = 0] * psi(income).
inline double repaired_impact_exact(const Dataset& data, const UtilityFunction& psi, const DerivedClassifier& dc,
                                    std::size_t a) {
  const std::string& group = data.groups().at(a);
  const std::size_t ca = dc.group_index(group);
  std::size_t qualified = 0;
  double harm = 0;
  for (const auto& r : data.records()) {
    if (r.truth != 1 || r.group != group) continue;
    ++qualified;
    const double deny = 1 - dc.probability(ca, dc.histogram().bucket_of(r.income), r.decision);
    harm += deny * psi(r.income);
  }
  if (qualified == 0) throw UndefinedMetricError("group '" + group + "' has no qualified records");
  return harm / static_cast<double>(qualified);
}

// Metrics of the repaired classifier, evaluated analytically (no sampling).
inline FairnessReport post_repair_report(const RepairProblem& problem, const LpSolution& solution) {
  return make_report(induced_stats(problem, solution.p), problem.histogram(), std::nullopt, problem.delta());
}

// As above, plus exact impacts of the repaired classifier on `data` under `psi`.
inline FairnessReport post_repair_report(const RepairProblem& problem, const LpSolution& solution,
                                         const Dataset& data, const UtilityFunction& psi) {
  const auto dc = to_classifier(problem, solution);
  std::vector<double> exact;
  for (std::size_t a = 0; a < data.groups().size(); ++a) exact.push_back(repaired_impact_exact(data, psi, dc, a));
  return make_report(induced_stats(problem, solution.p), problem.histogram(), exact, problem.delta());
}

}  // namespace eqimpact
