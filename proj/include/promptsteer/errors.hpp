#pragma once

#include <stdexcept>
#include <string>

namespace promptsteer {

// Invalid numeric input: zero norms, dimension mismatches, degenerate samples.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A keyed lookup (target, session, interaction) found nothing.
class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Caller-supplied data violates a schema or range constraint.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not permitted in the current state (e.g. submitting to a finished session).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend/transport failure. Callers may retry.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace promptsteer
