#pragma once

#include <stdexcept>
#include <string>

namespace hpnq {

// Input outside the valid domain of an operation (pressure out of range,
// non-finite reward, invalid parameter set).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid run configuration: unknown fields, wrong types, violated invariants.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pre-training could not be set up (e.g. no goal bin reachable).
class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two partial Q-tables wrote entries under the same goal bin.
class MergeConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary file format failures. Each failure mode has its own code so callers
// can tell a foreign file from a damaged one.
class FormatError : public std::runtime_error {
 public:
  enum class Code { kIo, kBadMagic, kVersionMismatch, kTruncated, kChecksumMismatch, kInvalidRecord };

  FormatError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

}  // namespace hpnq
