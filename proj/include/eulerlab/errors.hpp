#pragma once

#include <stdexcept>
#include <string>

namespace eulerlab {

/// Precondition or dimension mismatch on a public operation.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Evaluation requested outside the region where a field is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation needs data the caller did not supply (e.g. an inverse map).
class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No closed-orbit return was found before the configured time bound.
class PeriodNotFound : public std::runtime_error {
 public:
  PeriodNotFound(const std::string& what, double bound)
      : std::runtime_error(what), bound_(bound) {}
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace eulerlab
