#pragma once

#include <stdexcept>
#include <string>

namespace ltcr {

/// Invalid user-supplied configuration (bad config file, bad constructor args).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API precondition (wrong shapes, non-normalized input, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Something went wrong while executing an otherwise valid run.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

inline void require_config(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace ltcr
