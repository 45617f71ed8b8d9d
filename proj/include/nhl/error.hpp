#pragma once

#include <stdexcept>
#include <string>

namespace nhl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownConstant : public Error {
 public:
  explicit UnknownConstant(const std::string& name)
      : Error("unknown constant '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Syntax error in any of the text formats; carries a 1-based line and column
/// when known (0 otherwise).
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, int line = 0, int column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    if (line <= 0) return what;
    std::string loc = "line " + std::to_string(line);
    if (column > 0) loc += ", column " + std::to_string(column);
    return loc + ": " + what;
  }
  int line_;
  int column_;
};

/// Raised when an internal budget that should be unreachable is exhausted.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nhl
