#pragma once

#include <charconv>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "longmatch/errors.hpp"

namespace longmatch {

// Minimal CSV handling for the flat schemas used here: comma-separated,
// no quoting, lines starting with '#' are comments. Errors carry
// "<label>:<line>" so bad rows are locatable.

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string label) : in_(in), label_(std::move(label)) {}

  /// Reads the next data row into `fields`. Returns false at EOF.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
          fields.emplace_back(line.substr(start));
          break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  std::size_t line_number() const { return line_no_; }
  const std::string& label() const { return label_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw validation_error(label_ + ":" + std::to_string(line_no_) + ": " + message);
  }

  double parse_double(std::string_view field, std::string_view what) const {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      fail("invalid " + std::string(what) + " '" + std::string(field) + "'");
    }
    return value;
  }

  long parse_long(std::string_view field, std::string_view what) const {
    long value = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      fail("invalid " + std::string(what) + " '" + std::string(field) + "'");
    }
    return value;
  }

 private:
  std::istream& in_;
  std::string label_;
  std::size_t line_no_ = 0;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace longmatch
