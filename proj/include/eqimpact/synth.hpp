#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "eqimpact/dataset.hpp"
#include "eqimpact/error.hpp"
#include "eqimpact/random.hpp"

namespace eqimpact::synth {

struct GroupConfig {
  std::string name;
  std::size_t size = 10000;
  double median_income = 50000;
  double shape = 0.6;  // sigma of log-income
  double base_rate = 0.5;
  double fpr = 0;  // Pr[decision = 1 | truth = 0]
  double fnr = 0;  // Pr[decision = 0 | truth = 1]
};

struct SynthConfig {
  std::vector<GroupConfig> groups;
  std::uint64_t seed = 1;

  // Two loan applicant groups: a1 (median 120000, fpr 0.45, fnr 0.48) and
  // a2 (median 25000, fpr 0.23, fnr 0.28), 10000 records each.
  static SynthConfig defaults();

  // Reads `key = value` lines ('#' starts a comment) on top of defaults().
  // Keys: seed, groups (comma list; resets per-group settings to defaults),
  // size (every group), and <group>.{size,median,shape,base_rate,fpr,fnr}.
  static SynthConfig parse(std::istream& in);

  void validate() const;
};

inline SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.groups.push_back({"a1", 10000, 120000, 0.6, 0.5, 0.45, 0.48});
  c.groups.push_back({"a2", 10000, 25000, 0.6, 0.5, 0.23, 0.28});
  return c;
}

inline void SynthConfig::validate() const {
  if (groups.empty()) throw ParameterError("synth config needs at least one group");
  std::map<std::string, int> seen;
  for (const auto& g : groups) {
    if (g.name.empty()) throw ParameterError("synth group name is empty");
    if (seen[g.name]++) throw ParameterError("duplicate synth group '" + g.name + "'");
    if (g.size < 1) throw ParameterError("group '" + g.name + "': size must be >= 1");
    if (!(g.median_income > 0) || !std::isfinite(g.median_income)) {
      throw ParameterError("group '" + g.name + "': median income must be > 0");
    }
    if (!(g.shape >= 0) || !std::isfinite(g.shape)) throw ParameterError("group '" + g.name + "': shape must be >= 0");
    for (double r : {g.base_rate, g.fpr, g.fnr}) {
      if (!(r >= 0 && r <= 1)) throw ParameterError("group '" + g.name + "': rates must lie in [0, 1]");
    }
  }
}

inline SynthConfig SynthConfig::parse(std::istream& in) {
  SynthConfig c = defaults();
  std::string line;
  std::size_t line_no = 0;
  auto number = [&](const std::string& v) {
    const auto x = detail::parse_double(v);
    if (!x) throw RowError(line_no, "not a number: '" + v + "'");
    return *x;
  };
  auto count = [&](const std::string& v) {
    const double x = number(v);
    if (x < 0 || x != std::floor(x)) throw RowError(line_no, "not a nonnegative integer: '" + v + "'");
    return static_cast<std::size_t>(x);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw RowError(line_no, "expected key = value");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(count(value));
    } else if (key == "groups") {
      std::vector<GroupConfig> groups;
      for (const auto& name : detail::split_csv_line(value)) {
        GroupConfig g;
        g.name = std::string(detail::trim(name));
        groups.push_back(g);
      }
      c.groups = std::move(groups);
    } else if (key == "size") {
      for (auto& g : c.groups) g.size = count(value);
    } else {
      const auto dot = key.rfind('.');
      if (dot == std::string::npos) throw RowError(line_no, "unknown key '" + key + "'");
      const std::string name = key.substr(0, dot);
      const std::string field = key.substr(dot + 1);
      GroupConfig* g = nullptr;
      for (auto& candidate : c.groups) {
        if (candidate.name == name) g = &candidate;
      }
      if (!g) throw RowError(line_no, "unknown group '" + name + "'");
      if (field == "size") {
        g->size = count(value);
      } else if (field == "median") {
        g->median_income = number(value);
      } else if (field == "shape") {
        g->shape = number(value);
      } else if (field == "base_rate") {
        g->base_rate = number(value);
      } else if (field == "fpr") {
        g->fpr = number(value);
      } else if (field == "fnr") {
        g->fnr = number(value);
      } else {
        throw RowError(line_no, "unknown field '" + field + "'");
      }
    }
  }
  c.validate();
  return c;
}

// Incomes are log-normal around each group's median; truth is Bernoulli(base
// rate); the base decision copies truth and is flipped with probability fnr
// (truth = 1) or fpr (truth = 0). Records are emitted group by group.
inline Dataset generate(const SynthConfig& config) {
  config.validate();
  RandomStream rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Record> records;
  std::vector<std::string> names;
  for (const auto& g : config.groups) {
    names.push_back(g.name);
    for (std::size_t i = 0; i < g.size; ++i) {
      Record r;
      r.group = g.name;
      r.income = g.median_income * std::exp(g.shape * gauss(rng));
      r.truth = bernoulli(rng, g.base_rate) ? 1 : 0;
      const bool flip = bernoulli(rng, r.truth == 1 ? g.fnr : g.fpr);
      r.decision = flip ? 1 - r.truth : r.truth;
      records.push_back(std::move(r));
    }
  }
  return Dataset(std::move(records), std::move(names));
}

}  // namespace eqimpact::synth
