#pragma once

#include <stdexcept>
#include <string>

namespace ctrforge {

// Errors map to process exit codes in the CLI: config 2, data 3, numeric 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an API precondition. Always thrown, never compiled out.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

inline void contract(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace ctrforge
