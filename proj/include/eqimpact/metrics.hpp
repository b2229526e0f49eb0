#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eqimpact/dataset.hpp"
#include "eqimpact/error.hpp"
#include "eqimpact/stats.hpp"
#include "eqimpact/utility.hpp"

namespace eqimpact {

// nullopt marks a metric that is undefined because its stratum is empty.
using Metric = std::optional<double>;

struct GroupMetrics {
  std::string group;
  std::size_t y0_count = 0;
  std::size_t y1_count = 0;
  Metric base_rate;
  Metric positive_rate;
  Metric fpr;
  Metric fnr;
  Metric impact_bucketized;
  Metric impact_exact;
};

struct FairnessReport {
  std::vector<GroupMetrics> groups;
  Metric stat_parity_gap;
  Metric fpr_gap;
  Metric fnr_gap;
  Metric equalized_odds_gap;
  Metric equalized_opportunity_gap;
  Metric impact_gap;
  Metric impact_exact_gap;
  double epsilon = 0;
  Metric delta;
  std::size_t bucket_count = 0;
  std::vector<std::string> warnings;
};

// Largest absolute difference over all pairs; undefined if any entry is.
inline Metric max_pairwise_gap(const std::vector<Metric>& values) {
  double lo = 0;
  double hi = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) return std::nullopt;
    lo = i == 0 ? *values[i] : std::min(lo, *values[i]);
    hi = i == 0 ? *values[i] : std::max(hi, *values[i]);
  }
  return hi - lo;
}

inline double statistical_parity_gap(const ConditionalStats& stats) {
  std::vector<Metric> rates;
  for (std::size_t a = 0; a < stats.group_count(); ++a) rates.emplace_back(stats.positive_rate(a));
  return *max_pairwise_gap(rates);
}

// Pr[decision = 1 | truth = 0, group = a].
inline Metric fpr(const ConditionalStats& stats, std::size_t a) {
  if (stats.stratum_empty(a, 0)) return std::nullopt;
  double s = 0;
  for (std::size_t z = 0; z < stats.bucket_count(); ++z) s += stats.joint(a, 0, z, 1);
  return s;
}

// Pr[decision = 0 | truth = 1, group = a].
inline Metric fnr(const ConditionalStats& stats, std::size_t a) {
  if (stats.stratum_empty(a, 1)) return std::nullopt;
  double s = 0;
  for (std::size_t z = 0; z < stats.bucket_count(); ++z) s += stats.joint(a, 1, z, 0);
  return s;
}

inline Metric fpr_gap(const ConditionalStats& stats) {
  std::vector<Metric> v;
  for (std::size_t a = 0; a < stats.group_count(); ++a) v.push_back(fpr(stats, a));
  return max_pairwise_gap(v);
}

inline Metric fnr_gap(const ConditionalStats& stats) {
  std::vector<Metric> v;
  for (std::size_t a = 0; a < stats.group_count(); ++a) v.push_back(fnr(stats, a));
  return max_pairwise_gap(v);
}

inline Metric equalized_opportunity_gap(const ConditionalStats& stats) { return fnr_gap(stats); }

inline Metric equalized_odds_gap(const ConditionalStats& stats) {
  const auto fp = fpr_gap(stats);
  const auto fn = fnr_gap(stats);
  if (!fp || !fn) return std::nullopt;
  return std::max(*fp, *fn);
}

// Utility-weighted false-negative mass of group a under the bucketized utility:
// sum_z Pr[decision = 0, bucket = z | group = a, truth = 1] * v_z.
inline double impact_bucketized(const ConditionalStats& stats, const HistogramUtility& h, std::size_t a) {
  if (h.size() != stats.bucket_count()) throw ParameterError("histogram and stats disagree on bucket count");
  if (stats.stratum_empty(a, 1)) {
    throw UndefinedMetricError("group '" + stats.groups()[a] + "' has no qualified records");
  }
  double s = 0;
  for (std::size_t z = 0; z < h.size(); ++z) s += stats.joint(a, 1, z, 0) * h.values()[z];
  return s;
}

inline double impact_gap(const ConditionalStats& stats, const HistogramUtility& h) {
  std::vector<Metric> v;
  for (std::size_t a = 0; a < stats.group_count(); ++a) v.emplace_back(impact_bucketized(stats, h, a));
  return *max_pairwise_gap(v);
}

// Empirical utility-weighted false-negative rate of group a under the
// unbucketized utility: mean of psi(income) * [decision = 0] over qualified
// records of the group.
inline double impact_exact(const Dataset& data, const UtilityFunction& psi, std::size_t a) {
  if (a >= data.groups().size()) throw ParameterError("group index out of range");
  const std::string& group = data.groups()[a];
  std::size_t qualified = 0;
  double harm = 0;
  for (const auto& r : data.records()) {
    if (r.truth != 1 || r.group != group) continue;
    ++qualified;
    if (r.decision == 0) harm += psi(r.income);
  }
  if (qualified == 0) throw UndefinedMetricError("group '" + group + "' has no qualified records");
  return harm / static_cast<double>(qualified);
}

// Assembles every metric from stats. `exact_impacts` (one per group), when
// given, fills impact_exact and impact_exact_gap.
inline FairnessReport make_report(const ConditionalStats& stats, const HistogramUtility& h,
                                  const std::optional<std::vector<double>>& exact_impacts = std::nullopt,
                                  Metric delta = std::nullopt) {
  FairnessReport report;
  report.epsilon = h.epsilon();
  report.delta = delta;
  report.bucket_count = h.size();
  std::vector<Metric> exact;
  for (std::size_t a = 0; a < stats.group_count(); ++a) {
    GroupMetrics m;
    m.group = stats.groups()[a];
    m.y0_count = stats.count(a, 0);
    m.y1_count = stats.count(a, 1);
    if (!(stats.stratum_empty(a, 0) && stats.stratum_empty(a, 1))) {
      m.base_rate = stats.truth_rate(a, 1);
      m.positive_rate = stats.positive_rate(a);
    }
    m.fpr = fpr(stats, a);
    m.fnr = fnr(stats, a);
    if (!stats.stratum_empty(a, 1)) m.impact_bucketized = impact_bucketized(stats, h, a);
    if (exact_impacts) m.impact_exact = exact_impacts->at(a);
    exact.push_back(m.impact_exact);
    if (!m.fpr) report.warnings.push_back("group '" + m.group + "' has no records with truth = 0; fpr undefined");
    report.groups.push_back(std::move(m));
  }
  std::vector<Metric> positive;
  std::vector<Metric> bucketized;
  for (const auto& m : report.groups) {
    positive.push_back(m.positive_rate);
    bucketized.push_back(m.impact_bucketized);
  }
  report.stat_parity_gap = max_pairwise_gap(positive);
  report.fpr_gap = fpr_gap(stats);
  report.fnr_gap = fnr_gap(stats);
  report.equalized_odds_gap = equalized_odds_gap(stats);
  report.equalized_opportunity_gap = equalized_opportunity_gap(stats);
  report.impact_gap = max_pairwise_gap(bucketized);
  if (exact_impacts) report.impact_exact_gap = max_pairwise_gap(exact);
  if (stats.group_count() < 2) report.warnings.push_back("single group: all gaps are 0");
  return report;
}

// Full audit of a dataset: stats under `h`, exact impacts under `psi`.
inline FairnessReport audit(const Dataset& data, const UtilityFunction& psi, const HistogramUtility& h) {
  const auto stats = estimate_stats(data, h);
  std::vector<double> exact;
  for (std::size_t a = 0; a < data.groups().size(); ++a) exact.push_back(impact_exact(data, psi, a));
  return make_report(stats, h, exact);
}

}  // namespace eqimpact
