#pragma once

// Minimal CSV helpers shared by the readers. Fields may be double-quoted; a
// doubled quote inside a quoted field is a literal quote.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "jointprice/error.hpp"

namespace jointprice::detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      if (!trim(cell).empty()) {
        throw MalformedRow("unexpected quote inside unquoted field", line_no, cells.size() + 1);
      }
      cell.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cell : trim(cell));
      cell.clear();
      was_quoted = false;
    } else {
      cell += c;
    }
  }
  if (quoted) throw MalformedRow("unterminated quoted field", line_no, cells.size() + 1);
  cells.push_back(was_quoted ? cell : trim(cell));
  return cells;
}

inline double parse_double(const std::string& text, std::size_t line_no, std::size_t column) {
  const std::string t = trim(text);
  if (t.empty()) throw MalformedRow("empty numeric field", line_no, column);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw MalformedRow("not a finite number: '" + t + "'", line_no, column);
  }
  return v;
}

inline int parse_int(const std::string& text, std::size_t line_no, std::size_t column) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || v < -1000000 || v > 1000000) {
    throw MalformedRow("not an integer: '" + t + "'", line_no, column);
  }
  return static_cast<int>(v);
}

}  // namespace jointprice::detail
