#pragma once

#include <stdexcept>
#include <string>

namespace mepack {

/// Invalid parameters or infeasible request (CLI exit code 1).
class ValidationError : public std::runtime_error {
  public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

/// Numerical failure of an engine: series divergence, truncation leak,
/// integrator instability (CLI exit code 2).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration input (CLI exit code 3).
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace mepack
