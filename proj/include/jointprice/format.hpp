#pragma once

#include <cstdio>
#include <string>

namespace jointprice {

/// Round-trip text for a double: 17 significant digits.
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace jointprice
