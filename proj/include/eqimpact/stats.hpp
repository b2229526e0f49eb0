#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eqimpact/dataset.hpp"
#include "eqimpact/error.hpp"
#include "eqimpact/utility.hpp"

namespace eqimpact {

// Cost of predicting `predicted` when the truth is `truth`.
class LossSpec {
 public:
  // 0-1 loss.
  LossSpec() = default;
  // Diagonal cells are zero; fp = loss(1, 0), fn = loss(0, 1).
  static LossSpec costs(double false_positive, double false_negative) {
    return LossSpec({0.0, false_negative, false_positive, 0.0});
  }
  // cells indexed [predicted][truth].
  explicit LossSpec(std::array<double, 4> cells) : cells_(cells) {
    for (double c : cells_) {
      if (!std::isfinite(c) || c < 0) throw ParameterError("loss entries must be finite and nonnegative");
    }
    if (loss(0, 0) > loss(1, 0) || loss(1, 1) > loss(0, 1)) {
      throw ParameterError("a correct prediction may not cost more than an incorrect one");
    }
  }

  double loss(int predicted, int truth) const { return cells_[predicted * 2 + truth]; }
  double false_positive() const { return loss(1, 0); }
  double false_negative() const { return loss(0, 1); }

 private:
  std::array<double, 4> cells_{0.0, 1.0, 1.0, 0.0};
};

// Empirical conditional distribution of (decision, bucket) given (group, truth),
// the data both the audit metrics and the repair program consume.
//
// joint(a, y, z, d) = Pr[decision = d, bucket = z | group = a, truth = y]
// weight(a, y)      = Pr[group = a, truth = y]
// positive_rate(a)  = Pr[decision = 1 | group = a]
class ConditionalStats {
 public:
  ConditionalStats(std::vector<std::string> groups, std::size_t buckets, std::vector<double> joint,
                   std::vector<double> weight, std::vector<double> positive_rate,
                   std::vector<std::size_t> counts);

  const std::vector<std::string>& groups() const noexcept { return groups_; }
  std::size_t group_count() const noexcept { return groups_.size(); }
  std::size_t bucket_count() const noexcept { return buckets_; }

  double joint(std::size_t a, int y, std::size_t z, int d) const { return joint_[index(a, y, z, d)]; }
  double weight(std::size_t a, int y) const { return weight_[a * 2 + y]; }
  double positive_rate(std::size_t a) const { return positive_rate_[a]; }
  // Number of records in stratum (a, y); zero for analytic stats built without data.
  std::size_t count(std::size_t a, int y) const { return counts_[a * 2 + y]; }
  // True when Pr[group = a, truth = y] is zero; the stratum's joint cells are all zero.
  bool stratum_empty(std::size_t a, int y) const { return !(weight(a, y) > 0); }
  // Pr[truth = y | group = a].
  double truth_rate(std::size_t a, int y) const {
    const double total = weight(a, 0) + weight(a, 1);
    return total > 0 ? weight(a, y) / total : 0.0;
  }

  std::size_t index(std::size_t a, int y, std::size_t z, int d) const {
    return ((a * 2 + static_cast<std::size_t>(y)) * buckets_ + z) * 2 + static_cast<std::size_t>(d);
  }
  const std::vector<double>& joint_table() const noexcept { return joint_; }

 private:
  std::vector<std::string> groups_;
  std::size_t buckets_;
  std::vector<double> joint_;
  std::vector<double> weight_;
  std::vector<double> positive_rate_;
  std::vector<std::size_t> counts_;
};

inline ConditionalStats::ConditionalStats(std::vector<std::string> groups, std::size_t buckets,
                                          std::vector<double> joint, std::vector<double> weight,
                                          std::vector<double> positive_rate, std::vector<std::size_t> counts)
    : groups_(std::move(groups)),
      buckets_(buckets),
      joint_(std::move(joint)),
      weight_(std::move(weight)),
      positive_rate_(std::move(positive_rate)),
      counts_(std::move(counts)) {
  const std::size_t g = groups_.size();
  if (g == 0 || buckets_ == 0) throw ParameterError("stats need at least one group and one bucket");
  if (joint_.size() != g * 2 * buckets_ * 2 || weight_.size() != g * 2 || positive_rate_.size() != g) {
    throw ParameterError("stats table sizes do not match group and bucket counts");
  }
  if (counts_.empty()) counts_.assign(g * 2, 0);
  if (counts_.size() != g * 2) throw ParameterError("stats count table has wrong size");
  auto in_unit = [](double p) { return std::isfinite(p) && p >= 0 && p <= 1; };
  for (double p : joint_) {
    if (!in_unit(p)) throw ParameterError("joint probabilities must lie in [0, 1]");
  }
  double weight_sum = 0;
  for (double w : weight_) {
    if (!in_unit(w)) throw ParameterError("group weights must lie in [0, 1]");
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) throw ParameterError("group weights must sum to 1");
  for (double p : positive_rate_) {
    if (!in_unit(p)) throw ParameterError("positive rates must lie in [0, 1]");
  }
  for (std::size_t a = 0; a < g; ++a) {
    for (int y = 0; y < 2; ++y) {
      double s = 0;
      for (std::size_t z = 0; z < buckets_; ++z) s += this->joint(a, y, z, 0) + this->joint(a, y, z, 1);
      const double expected = stratum_empty(a, y) ? 0.0 : 1.0;
      if (std::abs(s - expected) > 1e-9) {
        throw ParameterError("joint table of group " + groups_[a] + " does not sum to " +
                             (expected > 0 ? "1" : "0"));
      }
    }
  }
}

// Counts records per (group, truth, bucket, decision) cell. No smoothing:
// unobserved cells get probability zero.
inline ConditionalStats estimate_stats(const Dataset& data, const HistogramUtility& bucketing) {
  const std::size_t g = data.groups().size();
  const std::size_t nb = bucketing.size();
  std::vector<std::size_t> cell(g * 2 * nb * 2, 0);
  std::vector<std::size_t> stratum(g * 2, 0);
  std::vector<std::size_t> positives(g, 0);
  for (const auto& r : data.records()) {
    const std::size_t a = *data.group_index(r.group);
    const std::size_t z = bucketing.bucket_of(r.income);
    ++cell[((a * 2 + r.truth) * nb + z) * 2 + r.decision];
    ++stratum[a * 2 + r.truth];
    positives[a] += r.decision;
  }
  for (std::size_t a = 0; a < g; ++a) {
    if (stratum[a * 2 + 1] == 0) {
      throw DatasetError("group '" + data.groups()[a] + "' has no records with truth = 1; impact is undefined");
    }
  }
  const auto total = static_cast<double>(data.size());
  std::vector<double> joint(cell.size(), 0.0);
  std::vector<double> weight(g * 2, 0.0);
  std::vector<double> positive_rate(g, 0.0);
  for (std::size_t a = 0; a < g; ++a) {
    for (int y = 0; y < 2; ++y) {
      const std::size_t n = stratum[a * 2 + y];
      weight[a * 2 + y] = static_cast<double>(n) / total;
      if (n == 0) continue;
      for (std::size_t z = 0; z < nb; ++z) {
        for (int d = 0; d < 2; ++d) {
          const std::size_t i = ((a * 2 + y) * nb + z) * 2 + d;
          joint[i] = static_cast<double>(cell[i]) / static_cast<double>(n);
        }
      }
    }
    positive_rate[a] =
        static_cast<double>(positives[a]) / static_cast<double>(stratum[a * 2] + stratum[a * 2 + 1]);
  }
  return ConditionalStats(data.groups(), nb, std::move(joint), std::move(weight), std::move(positive_rate),
                          std::move(stratum));
}

}  // namespace eqimpact
