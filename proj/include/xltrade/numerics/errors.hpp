#pragma once

#include <stdexcept>
#include <string>

namespace xltrade {

/// Operand shapes do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-side precondition was violated (wrong rank, wrong call order, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An operation produced NaN or infinity.
class NonFiniteError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace xltrade
