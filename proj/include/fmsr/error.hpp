#pragma once

#include <stdexcept>
#include <string>

namespace fmsr {

/// Invalid configuration values (negative sizes, disconnected topologies, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch, empty batch, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The operation has no meaning for the given inputs (e.g. a score function
/// for a policy without exploration noise).
class NotApplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint or file produced by an incompatible format/config.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FMSR_REQUIRE(cond, msg)                                   \
  do {                                                            \
    if (!(cond)) throw ::fmsr::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace fmsr
