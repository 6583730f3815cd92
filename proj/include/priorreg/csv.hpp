#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "priorreg/errors.hpp"

namespace priorreg {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // same width as header

  std::size_t column_index(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw config_error("column not found: " + name);
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line,
                                               std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
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
      if (!field.empty()) {
        throw data_error("line " + std::to_string(line_no) +
                         ": stray quote inside unquoted field");
      }
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw data_error("line " + std::to_string(line_no) +
                     ": unterminated quoted field");
  }
  fields.push_back(field);
  return fields;
}

inline void trim_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace detail

/// Reads a comma-separated file with a header row. Every data row must have
/// the same number of fields as the header; errors carry line numbers.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::trim_cr(line);
    if (line_no == 1) {
      table.header = detail::split_csv_line(line, line_no);
      continue;
    }
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (fields.size() != table.header.size()) {
      throw data_error("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw data_error(path + ": missing header row");
  return table;
}

/// Missing-value markers commonly found in the source datasets.
inline bool is_missing_field(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "?";
}

inline double parse_number(const std::string& s, std::size_t line_no,
                           const std::string& column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() ||
      !std::isfinite(value)) {
    throw data_error("line " + std::to_string(line_no) + ", column " + column +
                     ": not a number: '" + s + "'");
  }
  return value;
}

/// Formats a double so that the value round-trips and the output is stable
/// across runs.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace priorreg
