#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "eqimpact/eqimpact.hpp"

namespace eqimpact::testing {

// Stats from explicit counts, indexed [group][truth][bucket][decision].
inline ConditionalStats stats_from_counts(const std::vector<std::string>& groups, std::size_t buckets,
                                          const std::vector<std::size_t>& counts) {
  std::vector<Record> records;
  // One record per count at a bucket-specific income (bucket z at income z + 1).
  std::size_t i = 0;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (int y = 0; y < 2; ++y) {
      for (std::size_t z = 0; z < buckets; ++z) {
        for (int d = 0; d < 2; ++d, ++i) {
          for (std::size_t c = 0; c < counts[i]; ++c) {
            records.push_back({groups[a], static_cast<double>(z + 1), y, d});
          }
        }
      }
    }
  }
  std::vector<double> breakpoints;
  std::vector<double> values;
  for (std::size_t z = 0; z < buckets; ++z) {
    breakpoints.push_back(static_cast<double>(z + 1));
    values.push_back(1.0 - 0.5 * static_cast<double>(z) / static_cast<double>(buckets));
  }
  HistogramUtility h(breakpoints, values, 0.5, 1.0, static_cast<double>(buckets + 1));
  return estimate_stats(Dataset(std::move(records), groups), h);
}

// Histogram with the given values on breakpoints 1, 2, ..., n.
inline HistogramUtility histogram_with(const std::vector<double>& values, double epsilon = 0.5) {
  std::vector<double> breakpoints;
  for (std::size_t z = 0; z < values.size(); ++z) breakpoints.push_back(static_cast<double>(z + 1));
  return HistogramUtility(breakpoints, values, epsilon, 1.0, static_cast<double>(values.size() + 1));
}

// Random labeled dataset: groups with random incomes, base rates and error rates.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t groups, std::size_t per_group, double lo = 1.0,
                              double hi = 100.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Record> records;
  std::vector<std::string> names;
  for (std::size_t a = 0; a < groups; ++a) {
    const std::string name = "g" + std::to_string(a);
    names.push_back(name);
    const double base = 0.2 + 0.6 * unit(rng);
    const double fpr = 0.05 + 0.45 * unit(rng);
    const double fnr = 0.05 + 0.45 * unit(rng);
    const double skew = 0.3 + 2.0 * unit(rng);
    for (std::size_t i = 0; i < per_group; ++i) {
      Record r;
      r.group = name;
      r.income = lo * std::pow(hi / lo, std::pow(unit(rng), skew));
      r.truth = (i == 0 || unit(rng) < base) ? 1 : 0;
      const bool flip = unit(rng) < (r.truth ? fnr : fpr);
      r.decision = flip ? 1 - r.truth : r.truth;
      records.push_back(r);
    }
  }
  return Dataset(std::move(records), names);
}

}  // namespace eqimpact::testing
