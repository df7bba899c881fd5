#ifndef SRRL_ERRORS_HPP_
#define SRRL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace srrl {

// Bad caller input: out-of-vocabulary tokens, misaligned lists, missing fields.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Inconsistent or contradictory configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace srrl

#endif  // SRRL_ERRORS_HPP_
