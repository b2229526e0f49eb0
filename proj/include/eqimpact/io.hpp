#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eqimpact/error.hpp"
#include "eqimpact/metrics.hpp"
#include "eqimpact/repair.hpp"
#include "eqimpact/stats.hpp"

namespace eqimpact::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Rounds to 12 significant digits; the JSON writer then prints the shortest
// decimal, so reports never carry more than 12 digits.
inline double round12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::stod(buf);
}

inline Json metric_json(const Metric& m) { return m ? Json(round12(*m)) : Json(nullptr); }

inline Json to_json(const FairnessReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fairness_report";
  j["meta"] = {{"epsilon", round12(r.epsilon)}, {"delta", metric_json(r.delta)}, {"bucket_count", r.bucket_count}};
  Json groups = Json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"group", g.group},
                      {"y0_count", g.y0_count},
                      {"y1_count", g.y1_count},
                      {"base_rate", metric_json(g.base_rate)},
                      {"positive_rate", metric_json(g.positive_rate)},
                      {"fpr", metric_json(g.fpr)},
                      {"fnr", metric_json(g.fnr)},
                      {"impact_bucketized", metric_json(g.impact_bucketized)},
                      {"impact_exact", metric_json(g.impact_exact)}});
  }
  j["groups"] = std::move(groups);
  j["gaps"] = {{"statistical_parity", metric_json(r.stat_parity_gap)},
               {"fpr", metric_json(r.fpr_gap)},
               {"fnr", metric_json(r.fnr_gap)},
               {"equalized_odds", metric_json(r.equalized_odds_gap)},
               {"equalized_opportunity", metric_json(r.equalized_opportunity_gap)},
               {"impact", metric_json(r.impact_gap)},
               {"impact_exact", metric_json(r.impact_exact_gap)}};
  j["warnings"] = r.warnings;
  return j;
}

// Aligned plain-text rendering of a report.
inline std::string to_table(const FairnessReport& r) {
  auto cell = [](const Metric& m) {
    if (!m) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *m);
    return std::string(buf);
  };
  std::size_t name_width = 5;
  for (const auto& g : r.groups) name_width = std::max(name_width, g.group.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "group" << std::right;
  for (const char* h : {"n(y=0)", "n(y=1)", "base_rate", "pos_rate", "fpr", "fnr", "impact", "impact_exact"}) {
    out << "  " << std::setw(12) << h;
  }
  out << '\n';
  for (const auto& g : r.groups) {
    out << std::left << std::setw(static_cast<int>(name_width)) << g.group << std::right;
    out << "  " << std::setw(12) << g.y0_count << "  " << std::setw(12) << g.y1_count;
    for (const auto& m : {g.base_rate, g.positive_rate, g.fpr, g.fnr, g.impact_bucketized, g.impact_exact}) {
      out << "  " << std::setw(12) << cell(m);
    }
    out << '\n';
  }
  out << "\ngaps (max over pairs)\n";
  const std::pair<const char*, Metric> gaps[] = {{"statistical parity", r.stat_parity_gap},
                                                 {"fpr", r.fpr_gap},
                                                 {"fnr", r.fnr_gap},
                                                 {"equalized odds", r.equalized_odds_gap},
                                                 {"equalized opportunity", r.equalized_opportunity_gap},
                                                 {"impact", r.impact_gap},
                                                 {"impact (exact)", r.impact_exact_gap}};
  for (const auto& [name, m] : gaps) out << "  " << std::left << std::setw(22) << name << cell(m) << '\n';
  out << "\nepsilon " << r.epsilon << ", buckets " << r.bucket_count;
  if (r.delta) out << ", delta " << *r.delta;
  out << '\n';
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  return out.str();
}

struct SolverInfo {
  std::string status;
  double objective = 0;
  std::size_t iterations = 0;
  std::vector<double> residuals;
};

inline Json to_json(const DerivedClassifier& dc, double delta, const LossSpec& loss, const SolverInfo& solver) {
  const auto& h = dc.histogram();
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "derived_classifier";
  j["groups"] = dc.groups();
  j["histogram"] = {{"epsilon", h.epsilon()},
                    {"domain", {h.lo(), h.hi()}},
                    {"breakpoints", h.breakpoints()},
                    {"values", h.values()}};
  Json p = Json::array();
  for (std::size_t a = 0; a < dc.groups().size(); ++a) {
    Json buckets = Json::array();
    for (std::size_t z = 0; z < h.size(); ++z) buckets.push_back({dc.probability(a, z, 0), dc.probability(a, z, 1)});
    p.push_back({{"group", dc.groups()[a]}, {"grant_probability", std::move(buckets)}});
  }
  j["p"] = std::move(p);
  j["delta"] = delta;
  j["loss"] = {{"false_positive", loss.false_positive()}, {"false_negative", loss.false_negative()}};
  j["solver"] = {{"method", "dense two-phase simplex"},
                 {"pivot_rule", "bland"},
                 {"status", solver.status},
                 {"objective", solver.objective},
                 {"iterations", solver.iterations},
                 {"residuals", solver.residuals}};
  return j;
}

inline DerivedClassifier classifier_from_json(const Json& j) {
  try {
    if (j.at("kind").get<std::string>() != "derived_classifier") throw Error("not a derived classifier document");
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw Error("unsupported classifier schema_version");
    const auto& hj = j.at("histogram");
    HistogramUtility h(hj.at("breakpoints").get<std::vector<double>>(), hj.at("values").get<std::vector<double>>(),
                       hj.at("epsilon").get<double>(), hj.at("domain").at(0).get<double>(),
                       hj.at("domain").at(1).get<double>());
    auto groups = j.at("groups").get<std::vector<std::string>>();
    std::vector<double> p;
    const auto& pj = j.at("p");
    if (pj.size() != groups.size()) throw Error("classifier p table does not cover every group");
    for (std::size_t a = 0; a < groups.size(); ++a) {
      if (pj[a].at("group").get<std::string>() != groups[a]) throw Error("classifier p table out of group order");
      const auto& buckets = pj[a].at("grant_probability");
      if (buckets.size() != h.size()) throw Error("classifier p table does not cover every bucket");
      for (const auto& b : buckets) {
        p.push_back(b.at(0).get<double>());
        p.push_back(b.at(1).get<double>());
      }
    }
    return DerivedClassifier(std::move(groups), std::move(h), std::move(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed classifier JSON: ") + e.what());
  }
}

}  // namespace eqimpact::io
