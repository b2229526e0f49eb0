#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "eqimpact/error.hpp"

namespace eqimpact {

// One scored individual.
struct Record {
  std::string group;  // value of the protected attribute
  double income = 0;  // currency units per year, finite and > 0
  int truth = 0;      // 1 = qualified (would repay)
  int decision = 0;   // base classifier output, 1 = loan granted

  friend bool operator==(const Record&, const Record&) = default;
};

// Column names of the four required CSV fields.
struct Schema {
  std::string group = "group";
  std::string income = "income";
  std::string truth = "truth";
  std::string decision = "decision";

  // Parses "group=<col>,income=<col>,..." overrides on top of the defaults.
  static Schema parse(std::string_view spec);
};

class Dataset {
 public:
  // Groups are taken in order of first appearance.
  explicit Dataset(std::vector<Record> records);
  // Explicit group order; every record must belong to one of `groups`.
  Dataset(std::vector<Record> records, std::vector<std::string> groups);

  const std::vector<Record>& records() const noexcept { return records_; }
  const std::vector<std::string>& groups() const noexcept { return groups_; }
  std::size_t size() const noexcept { return records_.size(); }

  // Index of `group` in groups(), or nullopt.
  std::optional<std::size_t> group_index(std::string_view group) const;

  double min_income() const;
  double max_income() const;

 private:
  void index_groups();

  std::vector<Record> records_;
  std::vector<std::string> groups_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

namespace detail {

// Splits one CSV line into fields. Double quotes delimit fields that may
// contain commas; "" inside a quoted field is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

inline std::optional<int> parse_binary(std::string_view s) {
  s = trim(s);
  if (s == "0") return 0;
  if (s == "1") return 1;
  return std::nullopt;
}

// Shortest decimal that parses back to exactly `value`.
inline std::string format_exact(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace detail

inline Schema Schema::parse(std::string_view spec) {
  Schema schema;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    const auto item = detail::trim(spec.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParameterError("schema entry without '=': " + std::string(item));
    const auto key = detail::trim(item.substr(0, eq));
    const std::string value(detail::trim(item.substr(eq + 1)));
    if (value.empty()) throw ParameterError("empty column name for schema key " + std::string(key));
    if (key == "group") {
      schema.group = value;
    } else if (key == "income") {
      schema.income = value;
    } else if (key == "truth") {
      schema.truth = value;
    } else if (key == "decision") {
      schema.decision = value;
    } else {
      throw ParameterError("unknown schema key: " + std::string(key));
    }
  }
  return schema;
}

inline Dataset::Dataset(std::vector<Record> records) : records_(std::move(records)) {
  for (const auto& r : records_) {
    if (std::find(groups_.begin(), groups_.end(), r.group) == groups_.end()) groups_.push_back(r.group);
  }
  index_groups();
}

inline Dataset::Dataset(std::vector<Record> records, std::vector<std::string> groups)
    : records_(std::move(records)), groups_(std::move(groups)) {
  index_groups();
}

inline void Dataset::index_groups() {
  if (records_.empty()) throw DatasetError("dataset has no records");
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (!index_.emplace(groups_[i], i).second) throw DatasetError("duplicate group id: " + groups_[i]);
  }
  for (const auto& r : records_) {
    if (!index_.contains(r.group)) throw DatasetError("record group not declared: " + r.group);
    if (!std::isfinite(r.income) || r.income <= 0) throw DatasetError("income must be finite and positive");
    if ((r.truth != 0 && r.truth != 1) || (r.decision != 0 && r.decision != 1)) {
      throw DatasetError("truth and decision must be 0 or 1");
    }
  }
}

inline std::optional<std::size_t> Dataset::group_index(std::string_view group) const {
  const auto it = index_.find(group);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

inline double Dataset::min_income() const {
  return std::min_element(records_.begin(), records_.end(),
                          [](const Record& a, const Record& b) { return a.income < b.income; })
      ->income;
}

inline double Dataset::max_income() const {
  return std::max_element(records_.begin(), records_.end(),
                          [](const Record& a, const Record& b) { return a.income < b.income; })
      ->income;
}

// Reads a CSV with a header row. Extra columns are ignored.
inline Dataset load_dataset(std::istream& source, const Schema& schema = {}) {
  std::string line;
  if (!detail::read_line(source, line)) throw DatasetError("empty file: no header row");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);

  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (detail::trim(header[i]) == name) return i;
    }
    throw SchemaError("missing column '" + name + "'");
  };
  const std::size_t group_col = column(schema.group);
  const std::size_t income_col = column(schema.income);
  const std::size_t truth_col = column(schema.truth);
  const std::size_t decision_col = column(schema.decision);
  const std::size_t needed = std::max({group_col, income_col, truth_col, decision_col}) + 1;

  std::vector<Record> records;
  std::size_t line_no = 1;
  while (detail::read_line(source, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < needed) {
      throw RowError(line_no, "expected at least " + std::to_string(needed) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    Record r;
    r.group = std::string(detail::trim(fields[group_col]));
    if (r.group.empty()) throw RowError(line_no, "empty group id");
    const auto income = detail::parse_double(fields[income_col]);
    if (!income) throw RowError(line_no, "non-numeric income '" + fields[income_col] + "'");
    if (!std::isfinite(*income) || *income <= 0) {
      throw RowError(line_no, "income must be finite and positive, got '" + fields[income_col] + "'");
    }
    r.income = *income;
    const auto truth = detail::parse_binary(fields[truth_col]);
    if (!truth) throw RowError(line_no, "truth must be 0 or 1, got '" + fields[truth_col] + "'");
    r.truth = *truth;
    const auto decision = detail::parse_binary(fields[decision_col]);
    if (!decision) throw RowError(line_no, "decision must be 0 or 1, got '" + fields[decision_col] + "'");
    r.decision = *decision;
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DatasetError("file has a header but no data rows");
  return Dataset(std::move(records));
}

// Writes the dataset as CSV; incomes use the shortest exact decimal so a
// subsequent load_dataset reproduces the records bit for bit.
inline void write_dataset(std::ostream& out, const Dataset& data, const Schema& schema = {}) {
  out << detail::quote_csv(schema.group) << ',' << detail::quote_csv(schema.income) << ','
      << detail::quote_csv(schema.truth) << ',' << detail::quote_csv(schema.decision) << '\n';
  for (const auto& r : data.records()) {
    out << detail::quote_csv(r.group) << ',' << detail::format_exact(r.income) << ',' << r.truth << ','
        << r.decision << '\n';
  }
}

}  // namespace eqimpact
