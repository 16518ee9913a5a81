#include "crumbs/delimited.hpp"

#include <charconv>
#include <cmath>

#include "crumbs/error.hpp"

namespace crumbs {

DelimitedReader::DelimitedReader(std::istream& in) : in_(in) {
  std::string first;
  while (std::getline(in_, first)) {
    ++line_;
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (!first.empty()) break;
  }
  if (first.empty()) throw Error(ErrorKind::SchemaError, "missing header row");
  if (first.compare(0, 3, "\xEF\xBB\xBF") == 0) first.erase(0, 3);  // UTF-8 BOM
  delimiter_ = first.find('\t') != std::string::npos && first.find(',') == std::string::npos ? '\t' : ',';
  std::size_t begin = 0;
  for (;;) {
    const auto end = first.find(delimiter_, begin);
    header_.push_back(first.substr(begin, end == std::string::npos ? std::string::npos : end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  for (auto& h : header_) {
    if (h.size() >= 2 && h.front() == '"' && h.back() == '"') h = h.substr(1, h.size() - 2);
  }
  record_line_ = line_;
}

std::optional<std::size_t> DelimitedReader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

void DelimitedReader::expect_columns(const std::vector<std::string>& required,
                                     const std::vector<std::string>& optional) const {
  auto describe = [&] {
    std::string s;
    for (const auto& h : header_) s += (s.empty() ? "" : ",") + h;
    return s;
  };
  if (header_.size() < required.size()) {
    throw Error(ErrorKind::SchemaError, "missing columns in header '" + describe() + "'");
  }
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (header_[i] != required[i]) {
      throw Error(ErrorKind::SchemaError,
                  "expected column '" + required[i] + "' at position " + std::to_string(i + 1) +
                      ", header is '" + describe() + "'");
    }
  }
  std::size_t next_optional = 0;
  for (std::size_t i = required.size(); i < header_.size(); ++i) {
    while (next_optional < optional.size() && optional[next_optional] != header_[i]) ++next_optional;
    if (next_optional == optional.size()) {
      throw Error(ErrorKind::SchemaError, "unknown column '" + header_[i] + "'");
    }
    ++next_optional;
  }
}

bool DelimitedReader::next(std::vector<std::string>& fields) {
  while (read_record(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    return true;
  }
  return false;
}

bool DelimitedReader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return false;
  ++line_;
  record_line_ = line_;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw RowError(record_line_, "unterminated quoted field");
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field += ch;
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (ch == delimiter_) {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (ch == '\r') {
      if (in_.peek() == '\n') in_.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      field += ch;
    }
  }
}

void DelimitedWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << delimiter_;
    const std::string& f = fields[i];
    if (f.find_first_of(std::string{'"', '\n', '\r', delimiter_}) != std::string::npos) {
      out_ << '"';
      for (char ch : f) {
        if (ch == '"') out_ << '"';
        out_ << ch;
      }
      out_ << '"';
    } else {
      out_ << f;
    }
  }
  out_ << '\n';
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

}  // namespace crumbs
