#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pbk {

/// Raised when an argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for invalid configuration (bad parameter combinations, malformed input).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical failure: carries the module that failed and, where
/// meaningful, the abscissa at which it failed.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string module, const std::string& what,
               std::optional<double> abscissa = std::nullopt)
      : std::runtime_error(format(module, what, abscissa)),
        module_(std::move(module)),
        abscissa_(abscissa) {}

  const std::string& module() const noexcept { return module_; }
  std::optional<double> abscissa() const noexcept { return abscissa_; }

 private:
  static std::string format(const std::string& module, const std::string& what,
                            std::optional<double> abscissa) {
    std::ostringstream os;
    os << module << ": " << what;
    if (abscissa) {
      os.precision(12);
      os << " at " << *abscissa;
    }
    return os.str();
  }

  std::string module_;
  std::optional<double> abscissa_;
};

}  // namespace pbk
