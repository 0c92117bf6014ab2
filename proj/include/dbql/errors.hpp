#pragma once

#include <stdexcept>
#include <string>

namespace dbql {

// Precondition breach by the caller: shape mismatch, out-of-range parameter,
// malformed probability table.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A valid request that this implementation does not handle (for instance a
// quadrature rule for an operator composition it cannot integrate).
class UnsupportedConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration or document that does not match its schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-system failure, always carrying the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

[[noreturn]] void contract_fail(const std::string& what);

inline void require(bool cond, const char* what) {
  if (!cond) contract_fail(what);
}

}  // namespace dbql
