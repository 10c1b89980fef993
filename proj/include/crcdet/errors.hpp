#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crcdet {

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        source_(source),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& scan_id, const std::string& field, const std::string& what)
      : std::runtime_error("scan '" + scan_id + "', field '" + field + "': " + what),
        scan_id_(scan_id),
        field_(field) {}

  const std::string& scan_id() const noexcept { return scan_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string scan_id_;
  std::string field_;
};

/// Invalid or infeasible configuration (generator, plan, strategy parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crcdet
