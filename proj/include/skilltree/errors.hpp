#pragma once

#include <stdexcept>
#include <string>

namespace skilltree {

/// Precondition broken by the caller (bad shape, bad dimension, bad index).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf showed up where finite values are required.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or mismatched checkpoint. `section()` names the offending part.
class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(std::string section, const std::string& what)
      : std::runtime_error("checkpoint section '" + section + "': " + what),
        section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

/// Data cleaning removed every trajectory; lower the threshold and retry.
class EmptyAfterCleaning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace skilltree
