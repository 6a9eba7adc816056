#pragma once

#include <stdexcept>
#include <string>

namespace pvdamp {

/// Bad shapes, out-of-range parameters, malformed files. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A solve that cannot continue (e.g. degenerate Onsager denominator). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace pvdamp
