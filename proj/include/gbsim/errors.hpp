#pragma once

#include <stdexcept>
#include <string>

namespace gbsim {

// Error taxonomy mirrors the CLI exit-code contract: input validation
// failures exit with 2, runtime or statistical failures with 1.

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what)
      : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ValidationError(what);
}

}  // namespace gbsim
