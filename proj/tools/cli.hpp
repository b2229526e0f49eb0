#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eqimpact/eqimpact.hpp"

namespace eqimpact::cli {

inline constexpr std::size_t kApplyShardRows = 4096;

struct Options {
  std::string input;
  std::string output;
  std::string classifier;
  std::string config;
  std::string psi = "reciprocal";
  double epsilon = 0.05;
  double delta = kDefaultDelta;
  double loss_fp = 1.0;
  double loss_fn = 1.0;
  std::uint64_t seed = 1;
  std::string schema;
  double step = 0.01;
  std::optional<std::size_t> size;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write '" + path + "'");
  out << content;
}

inline Dataset load(const Options& o) {
  if (o.input.empty()) throw ParameterError("--input is required");
  std::istringstream in(read_file(o.input));
  return load_dataset(in, Schema::parse(o.schema));
}

// Presets take their domain from the observed income range.
inline UtilityFunction utility(const Options& o, const Dataset& data) {
  double lo = data.min_income();
  double hi = data.max_income();
  if (!(hi > lo)) hi = 2 * lo;
  if (o.psi == "constant") return UtilityFunction::constant(1.0, lo, hi);
  if (o.psi == "reciprocal") return UtilityFunction::reciprocal(lo, hi);
  if (o.psi.starts_with("table:")) {
    std::istringstream in(read_file(o.psi.substr(6)));
    return load_utility_table(in);
  }
  throw ParameterError("--psi must be constant, reciprocal or table:<path>");
}

inline void check(const Options& o) {
  if (!(o.epsilon > 0 && o.epsilon < 1)) throw ParameterError("--epsilon must lie in (0, 1)");
  if (!(o.delta >= 0)) throw ParameterError("--delta must be >= 0");
}

struct Pipeline {
  Dataset data;
  UtilityFunction psi;
  HistogramUtility h;
};

inline Pipeline prepare(const Options& o) {
  check(o);
  auto data = load(o);
  auto psi = normalize(utility(o, data));
  auto h = build_histogram(psi, o.epsilon);
  return {std::move(data), std::move(psi), std::move(h)};
}

inline RepairProblem problem_for(const Options& o, const Pipeline& p) {
  return RepairProblem(estimate_stats(p.data, p.h), p.h, LossSpec::costs(o.loss_fp, o.loss_fn), o.delta);
}

inline void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.output.empty()) {
    out << text;
  } else {
    write_file(o.output, text);
  }
}

inline int run_audit(const Options& o, std::ostream& out) {
  const auto p = prepare(o);
  const auto report = audit(p.data, p.psi, p.h);
  const std::string json = io::to_json(report).dump(2) + "\n";
  if (o.output.empty()) {
    out << json;
  } else {
    write_file(o.output, json);
    out << io::to_table(report);
  }
  return 0;
}

inline int run_repair(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.output.empty()) throw ParameterError("--output (classifier path) is required for repair");
  const auto p = prepare(o);
  const auto problem = problem_for(o, p);
  const auto solution = solve(problem);
  if (solution.status != SolveStatus::kOptimal) {
    err << "repair failed: " << to_string(solution.status) << ": " << solution.diagnostics << '\n';
    return 1;
  }
  const auto dc = to_classifier(problem, solution);
  const io::SolverInfo info{to_string(solution.status), solution.objective, solution.iterations, solution.residuals};
  write_file(o.output, io::to_json(dc, o.delta, problem.loss(), info).dump(2) + "\n");
  out << io::to_json(post_repair_report(problem, solution, p.data, p.psi)).dump(2) << '\n';
  return 0;
}

inline int run_apply(const Options& o, std::ostream& out) {
  if (o.classifier.empty()) throw ParameterError("--classifier is required for apply");
  if (o.input.empty()) throw ParameterError("--input is required");
  const auto dc = io::classifier_from_json(io::Json::parse(read_file(o.classifier)));
  const std::string text = read_file(o.input);
  std::istringstream parse_in(text);
  const auto data = load_dataset(parse_in, Schema::parse(o.schema));

  std::istringstream in(text);
  std::ostringstream result;
  std::string line;
  eqimpact::detail::read_line(in, line);
  result << line << ",repaired_decision\n";
  std::size_t row = 0;
  std::optional<RandomStream> rng;
  while (eqimpact::detail::read_line(in, line)) {
    if (eqimpact::detail::trim(line).empty()) continue;
    if (row % kApplyShardRows == 0) rng = derive_stream(o.seed, row / kApplyShardRows);
    const auto& r = data.records()[row];
    result << line << ',' << dc.apply(r.group, r.income, r.decision, *rng) << '\n';
    ++row;
  }
  emit(o, out, result.str());
  return 0;
}

inline int run_synth(const Options& o, std::ostream& out, bool seed_given) {
  auto config = synth::SynthConfig::defaults();
  if (!o.config.empty()) {
    std::istringstream in(read_file(o.config));
    config = synth::SynthConfig::parse(in);
  }
  if (o.size) {
    for (auto& g : config.groups) g.size = *o.size;
  }
  if (seed_given) config.seed = o.seed;
  const auto data = synth::generate(config);
  std::ostringstream csv;
  write_dataset(csv, data);
  emit(o, out, csv.str());
  return 0;
}

inline int run_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const auto p = prepare(o);
  const auto problem = problem_for(o, p);
  const auto solution = solve(problem);
  if (solution.status != SolveStatus::kOptimal) {
    err << "LP solve failed: " << solution.diagnostics << '\n';
    return 1;
  }
  oracle::GridSpec grid;
  grid.step = o.step;
  const auto best = oracle::grid_search(problem, grid);
  io::Json j;
  j["schema_version"] = io::kSchemaVersion;
  j["kind"] = "verification";
  j["variables"] = problem.variable_count();
  j["step"] = o.step;
  j["delta"] = o.delta;
  j["lp_objective"] = solution.objective;
  j["grid_objective"] = best.objective;
  j["gap"] = best.objective - solution.objective;
  j["lp_p"] = solution.p;
  j["grid_p"] = best.p;
  j["grid_candidates"] = best.candidates;
  emit(o, out, j.dump(2) + "\n");
  return 0;
}

}  // namespace detail

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 on success, 2 for invalid input or arguments, 1 for other failures.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fairness audit and equalized-financial-impact repair"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--input", o.input, "dataset CSV");
    sub->add_option("--output", o.output, "output path (stdout when omitted)");
    sub->add_option("--psi", o.psi, "utility: constant | reciprocal | table:<path>");
    sub->add_option("--epsilon", o.epsilon, "histogram resolution in (0, 1)");
    sub->add_option("--delta", o.delta, "slack on impact equality");
    sub->add_option("--loss-fp", o.loss_fp, "cost of a false positive");
    sub->add_option("--loss-fn", o.loss_fn, "cost of a false negative");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--schema", o.schema, "column overrides: group=<col>,income=<col>,truth=<col>,decision=<col>");
  };
  auto* audit_cmd = app.add_subcommand("audit", "measure fairness metrics of a scored dataset");
  auto* repair_cmd = app.add_subcommand("repair", "solve for a derived classifier with equalized impact");
  auto* apply_cmd = app.add_subcommand("apply", "score a dataset with a derived classifier");
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic loan dataset");
  auto* verify_cmd = app.add_subcommand("verify", "check the LP optimum against a grid search");
  for (auto* sub : {audit_cmd, repair_cmd, apply_cmd, synth_cmd, verify_cmd}) common(sub);
  apply_cmd->add_option("--classifier", o.classifier, "classifier JSON written by repair");
  synth_cmd->add_option("--config", o.config, "key = value config file");
  synth_cmd->add_option("--size", o.size, "records per group");
  verify_cmd->add_option("--step", o.step, "grid step (1/step must be an integer)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*audit_cmd) return detail::run_audit(o, out);
    if (*repair_cmd) return detail::run_repair(o, out, err);
    if (*apply_cmd) return detail::run_apply(o, out);
    if (*synth_cmd) return detail::run_synth(o, out, synth_cmd->count("--seed") > 0);
    if (*verify_cmd) return detail::run_verify(o, out, err);
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const RowError& e) {
    err << "row error: " << e.what() << '\n';
    return 2;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const UtilityError& e) {
    err << "utility error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace eqimpact::cli
