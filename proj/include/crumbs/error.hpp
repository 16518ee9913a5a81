#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crumbs {

enum class ErrorKind {
  UnmappedNamespace,
  MalformedXml,
  SchemaError,
  RowError,
  ConflictError,
  UnknownTheme,
  UnknownClass,
  UnknownFeature,
  MissingUser,
  DegeneratePrior,
  DegenerateFeature,
  EmptyCohort,
  EmptyDataset,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every recoverable failure in the toolkit is reported as a crumbs::Error;
// callers dispatch on kind() (the CLI maps kinds onto exit codes).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Row-level failure from a delimited reader; line numbers are 1-based and
// count the header.
class RowError : public Error {
 public:
  RowError(std::size_t line, const std::string& message)
      : Error(ErrorKind::RowError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MalformedXml : public Error {
 public:
  MalformedXml(std::uint64_t byte_offset, const std::string& message)
      : Error(ErrorKind::MalformedXml, "at byte " + std::to_string(byte_offset) + ": " + message),
        byte_offset_(byte_offset) {}

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

}  // namespace crumbs
