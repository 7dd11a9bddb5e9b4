#pragma once

// Comma-separated text I/O shared by every artifact: one header row, `,`
// delimiter, `.` decimal point. Fields containing a delimiter, quote or line
// break are double-quoted on output and unquoted on input.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "surrogate/error.hpp"

namespace surrogate {

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::kInvalidArgument, "cannot format number");
  return std::string(buf, end);
}

/// Fixed-point text with `decimals` digits, ties rounded half-to-even.
inline std::string format_fixed(double value, int decimals = 2) {
  if (std::isnan(value)) return "NA";
  const double scale = std::pow(10.0, decimals);
  double scaled = std::nearbyint(value * scale);
  if (scaled == 0.0) scaled = 0.0;  // drop negative zero
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), scaled / scale,
                                 std::chars_format::fixed, decimals);
  if (ec != std::errc()) throw Error(ErrorCode::kInvalidArgument, "cannot format number");
  return std::string(buf, end);
}

inline std::optional<double> try_parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record; returns false at end of input.
  bool read_row(std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in_.get(c)) {
      any = true;
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get(c);
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
        continue;
      }
      if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n') {
        fields.push_back(std::move(field));
        ++line_;
        return true;
      } else if (c != '\r') {
        field.push_back(c);
      }
    }
    if (!any) return false;
    if (quoted) throw Error(ErrorCode::kParseError, "unterminated quoted field at line " + std::to_string(line_ + 1));
    fields.push_back(std::move(field));
    ++line_;
    return true;
  }

  /// 1-based line number of the most recently read record.
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline void write_csv_field(std::ostream& out, std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

template <typename Range>
void write_csv_row(std::ostream& out, const Range& fields) {
  bool first = true;
  for (const auto& field : fields) {
    if (!first) out << ',';
    first = false;
    write_csv_field(out, field);
  }
  out << '\n';
}

/// Header lookup: column name -> position.
class CsvHeader {
 public:
  CsvHeader() = default;
  explicit CsvHeader(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
  }

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const std::string& name, std::string_view what) const {
    auto pos = find(name);
    if (!pos) {
      throw Error(ErrorCode::kMissingColumn,
                  std::string(what) + " is missing required column '" + name + "'");
    }
    return *pos;
  }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace surrogate
