#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace velo {

/// Base class for every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document; byte_offset() locates the problem in the input stream.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t byte_offset)
      : Error(message + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Malformed CSV row; line() is 1-based and counts the header line.
class CsvError : public Error {
 public:
  CsvError(const std::string& message, std::size_t line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid document violating the schema; field() names the offender.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, std::string field)
      : Error(message + " (field '" + field + "')"), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Destination not reachable from origin. Distinct from the empty
/// origin==destination path, which is a valid result.
class NoPathError : public Error {
 public:
  using Error::Error;
};

}  // namespace velo
