#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grove {

enum class Errc {
  parse_error,
  schema_violation,
  invalid_argument,
  not_found,
  conflict,
  incompatible_ensemble,
  duplicate_context,
  precondition,
  io_error,
};

std::string_view to_string(Errc code);

/// Every failure surfaced by the library. The code drives HTTP status
/// mapping in the service and exit codes in the CLI.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Parse failure with a 1-based line/column into the offending document.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(Errc::parse_error, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        detail_(message) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace grove
