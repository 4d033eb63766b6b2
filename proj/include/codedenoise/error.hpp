#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace codedenoise {

enum class ErrorKind {
  syntax,
  collision,
  illegal_name,
  not_found,
  capability,
  protocol,
  transport,
  no_candidate,
  validation,
  structure,
  usage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::syntax: return "syntax";
    case ErrorKind::collision: return "collision";
    case ErrorKind::illegal_name: return "illegal-name";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::capability: return "capability";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::transport: return "transport";
    case ErrorKind::no_candidate: return "no-candidate";
    case ErrorKind::validation: return "validation";
    case ErrorKind::structure: return "structure";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failure. Offsets are byte offsets into the source; line and column
// are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t offset, std::size_t line,
              std::size_t column)
      : Error(ErrorKind::syntax, format(message, line, column)),
        message_(message),
        offset_(offset),
        line_(line),
        column_(column) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line,
                            std::size_t column) {
    return "syntax error at " + std::to_string(line) + ":" +
           std::to_string(column) + ": " + message;
  }

  std::string message_;
  std::size_t offset_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace codedenoise
