#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace contagion {

//! Caller broke an operation's precondition (e.g. obligor already in the set).
class ContractViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

//! Obligor index outside 1..N or tranche index outside the deck.
class IndexError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

//! Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

//! An intermediate quantity left its admissible range (log of a nonpositive number, ...).
class NumericDomainError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

//! Problem too large for an exact enumeration path.
class SizeRefusal : public std::length_error {
  public:
    using std::length_error::length_error;
};

//! Two rates of an exponential ladder coincide within the collision tolerance.
class RateCollision : public std::runtime_error {
  public:
    RateCollision(std::size_t first, std::size_t second, double value)
        : std::runtime_error("rate collision between ladder entries " + std::to_string(first) + " and " +
                             std::to_string(second) + " (value " + std::to_string(value) + ")"),
          first_(first), second_(second), value_(value) {}

    std::pair<std::size_t, std::size_t> pair() const { return {first_, second_}; }
    double value() const { return value_; }

  private:
    std::size_t first_;
    std::size_t second_;
    double value_;
};

//! Premium leg vanishes on the whole payment grid.
class DegenerateTranche : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

//! Extended precision did not leave enough significant bits after cancellation.
class PrecisionLoss : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

//! Malformed configuration or quote file; the message carries the location.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class CalibrationFailed : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NoRoot : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace contagion
