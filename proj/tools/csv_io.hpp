#pragma once

// Numeric CSV ingestion and emission for the command-line front end. Files
// have a header row, comma separators and '.' decimals; missing or
// non-finite fields are rejected with their line number.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "qasis/errors.hpp"
#include "qasis/simgen.hpp"
#include "qasis/survival.hpp"

namespace qasis::io {

class ParseError : public InvalidArgumentError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InvalidArgumentError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct InputTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // columns[c][row]
  std::vector<std::size_t> line_numbers;     // source line of each row
  std::size_t rows = 0;

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline InputTable read_csv(std::istream& in) {
  InputTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw ParseError(line_no, "missing header row");
  for (auto name : detail::split(line)) {
    if (name.empty()) throw ParseError(line_no, "empty column name in header");
    table.header.emplace_back(name);
  }
  table.columns.resize(table.header.size());

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line);
    if (fields.size() != table.header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto field = fields[c];
      if (field.empty()) throw ParseError(line_no, "missing value in column '" + table.header[c] + "'");
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw ParseError(line_no, "column '" + table.header[c] + "': '" + std::string(field) +
                                      "' is not a finite number");
      }
      table.columns[c].push_back(value);
    }
    table.line_numbers.push_back(line_no);
    ++table.rows;
  }
  return table;
}

/// Features, response and optional event indicator pulled from a table.
struct ScreeningData {
  Eigen::MatrixXd X;
  std::vector<std::string> feature_names;
  std::vector<double> y;
  std::optional<std::vector<int>> status;

  std::vector<CensoredSample> samples() const {
    std::vector<CensoredSample> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = {y[i], status ? (*status)[i] : 1};
    return out;
  }
};

inline ScreeningData split_table(const InputTable& table, const std::string& response,
                                 const std::optional<std::string>& status_column) {
  const auto response_col = table.find(response);
  if (!response_col) throw InvalidArgumentError("response column '" + response + "' not found in header");
  std::optional<std::size_t> status_col;
  if (status_column) {
    status_col = table.find(*status_column);
    if (!status_col) throw InvalidArgumentError("status column '" + *status_column + "' not found in header");
    if (*status_col == *response_col) throw InvalidArgumentError("status and response must be different columns");
  }

  ScreeningData data;
  data.y = table.columns[*response_col];
  if (status_col) {
    std::vector<int> status(table.rows);
    for (std::size_t i = 0; i < table.rows; ++i) {
      const double v = table.columns[*status_col][i];
      if (v != 0.0 && v != 1.0) {
        throw ParseError(table.line_numbers[i], "status column '" + *status_column + "' must be 0 or 1");
      }
      status[i] = static_cast<int>(v);
    }
    data.status = std::move(status);
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *response_col || (status_col && c == *status_col)) continue;
    feature_cols.push_back(c);
    data.feature_names.push_back(table.header[c]);
  }
  if (feature_cols.empty()) throw InvalidArgumentError("input has no feature columns");
  data.X.resize(static_cast<Eigen::Index>(table.rows), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t k = 0; k < feature_cols.size(); ++k) {
    for (std::size_t i = 0; i < table.rows; ++i) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = table.columns[feature_cols[k]][i];
    }
  }
  return data;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

/// Columns X1..Xp, y and, for the censored design, status. Censored designs
/// write the observed time as y.
inline void write_instance_csv(std::ostream& out, const ExampleInstance& inst) {
  const auto p = inst.X.cols();
  for (Eigen::Index j = 0; j < p; ++j) out << 'X' << (j + 1) << ',';
  out << 'y';
  if (inst.is_censored()) out << ",status";
  out << '\n';
  for (Eigen::Index i = 0; i < inst.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out << format_double(inst.X(i, j)) << ',';
    const auto row = static_cast<std::size_t>(i);
    if (inst.is_censored()) {
      out << format_double(inst.censored[row].y_star) << ',' << inst.censored[row].delta;
    } else {
      out << format_double(inst.y[row]);
    }
    out << '\n';
  }
}

}  // namespace qasis::io
