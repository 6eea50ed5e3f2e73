#pragma once

#include <stdexcept>
#include <string>

namespace fxmm {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { validation, data, io, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct NoDataError : DataError {
  explicit NoDataError(const std::string& what) : DataError("no data: " + what) {}
};

struct DegenerateInputError : DataError {
  explicit DegenerateInputError(const std::string& what) : DataError("degenerate input: " + what) {}
};

struct InsufficientDataError : DataError {
  explicit InsufficientDataError(const std::string& what) : DataError("insufficient data: " + what) {}
};

struct ParseError : DataError {
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

struct NonConvergenceError : NumericError {
  explicit NonConvergenceError(const std::string& what) : NumericError("no convergence: " + what) {}
};

struct UndefinedLikelihoodError : NumericError {
  explicit UndefinedLikelihoodError(const std::string& what)
      : NumericError("undefined likelihood: " + what) {}
};

struct UnboundedHamiltonianError : NumericError {
  explicit UnboundedHamiltonianError(const std::string& what)
      : NumericError("unbounded Hamiltonian: " + what) {}
};

}  // namespace fxmm
