#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace viewcast {

// Root of every error thrown by the library. Subclasses name the failure
// category so callers can catch narrowly.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class OrderingError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class DuplicationError : public Error { using Error::Error; };
class ReferentialError : public Error { using Error::Error; };
class ConfigurationError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class SampleSizeError : public Error { using Error::Error; };
class DegenerateError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class CoverageError : public Error { using Error::Error; };
class SizeError : public Error { using Error::Error; };

// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace viewcast
