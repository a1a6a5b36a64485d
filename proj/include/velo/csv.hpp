#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "velo/errors.hpp"

namespace velo::csv {

/// RFC-4180-style record reader: comma separated, double quotes escape
/// embedded commas/quotes/newlines, CRLF and LF both accepted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Line number (1-based) of the record produced by the last next() call.
  std::size_t line() const noexcept { return record_line_; }

  std::optional<std::vector<std::string>> next() {
    int c = in_.get();
    while (c == '\n') {  // tolerate blank lines between records
      ++current_line_;
      c = in_.get();
    }
    if (c == std::istream::traits_type::eof()) return std::nullopt;

    record_line_ = current_line_;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool quote_seen = false;  // inside a quoted field, a '"' was just read
    for (;;) {
      if (c == std::istream::traits_type::eof()) {
        if (quoted && !quote_seen)
          throw CsvError("unterminated quoted field", record_line_);
        fields.push_back(std::move(field));
        return fields;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (quote_seen) {
          quote_seen = false;
          if (ch == '"') {
            field.push_back('"');
          } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
            quoted = false;
          } else if (ch == '\n' || ch == '\r') {
            quoted = false;
            continue;  // fall through to unquoted end-of-record handling
          } else {
            throw CsvError("unexpected character after closing quote", record_line_);
          }
        } else if (ch == '"') {
          quote_seen = true;
        } else {
          if (ch == '\n') ++current_line_;
          field.push_back(ch);
        }
      } else {
        if (ch == ',') {
          fields.push_back(std::move(field));
          field.clear();
        } else if (ch == '\n' || ch == '\r') {
          if (ch == '\r' && in_.peek() == '\n') in_.get();
          ++current_line_;
          fields.push_back(std::move(field));
          return fields;
        } else if (ch == '"' && field.empty()) {
          quoted = true;
        } else {
          field.push_back(ch);
        }
      }
      c = in_.get();
    }
  }

 private:
  std::istream& in_;
  std::size_t current_line_ = 1;
  std::size_t record_line_ = 1;
};

inline bool needs_quoting(std::string_view field) {
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string quote(std::string_view field) {
  if (!needs_quoting(field)) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    out << quote(fields[i]);
  }
  out.put('\n');
}

}  // namespace velo::csv
