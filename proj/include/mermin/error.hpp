#pragma once

#include <stdexcept>
#include <string>

namespace mermin {

// Malformed input values (non-unit vectors, bad settings files).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operands over different particle counts, or an operator of the wrong size.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The request exceeds a configured size limit (dense matrices, enumeration).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mermin
