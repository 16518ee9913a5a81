#pragma once

// Minimal RFC-4180-style reader/writer for the comma or tab separated files
// the toolkit exchanges. Fields may be double-quoted; quotes inside quoted
// fields are doubled.

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace crumbs {

class DelimitedReader {
 public:
  // Reads the header row; the delimiter (',' or '\t') is detected from it.
  explicit DelimitedReader(std::istream& in);

  const std::vector<std::string>& header() const { return header_; }
  char delimiter() const { return delimiter_; }

  // Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;

  // Requires the header to be exactly `required` followed by any subset of
  // `optional` (in that order); throws SchemaError otherwise.
  void expect_columns(const std::vector<std::string>& required,
                      const std::vector<std::string>& optional = {}) const;

  // Next non-empty record; false at end of input. line() is the 1-based
  // line number of the record just returned.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const { return record_line_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::istream& in_;
  std::vector<std::string> header_;
  char delimiter_ = ',';
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

class DelimitedWriter {
 public:
  explicit DelimitedWriter(std::ostream& out, char delimiter = ',') : out_(out), delimiter_(delimiter) {}

  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  char delimiter_;
};

// Shortest round-trippable decimal text for a double ("nan"/"inf" for
// non-finite values); deterministic across runs.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace crumbs
