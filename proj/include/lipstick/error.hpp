#pragma once

#include <stdexcept>
#include <string>

namespace lipstick {

/// Broad failure categories; the CLI maps them onto exit codes.
enum class ErrorKind {
  Usage,       // bad flags / arguments
  Format,      // malformed file, schema violation, unknown id
  Parse,       // Pig Latin syntax
  Type,        // resolution / type checking
  Evaluation,  // runtime failure while evaluating a program or workflow
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ", column " +
                                    std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class TypeError : public Error {
 public:
  explicit TypeError(const std::string& what) : Error(ErrorKind::Type, what) {}
};

class EvalError : public Error {
 public:
  explicit EvalError(const std::string& what) : Error(ErrorKind::Evaluation, what) {}
};

}  // namespace lipstick
