#include "dbql/errors.hpp"

namespace dbql {

IoError::IoError(const std::string& path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(path) {}

void contract_fail(const std::string& what) { throw ContractViolation(what); }

}  // namespace dbql
