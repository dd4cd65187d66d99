#pragma once

#include <stdexcept>
#include <string>

namespace martpoly {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed textual input (rationals, JSON documents, flag values).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid input: wrong lengths, bad probabilities, bad trees.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// The face-enumeration guard was hit (b > max_outcomes).
class LimitExceeded : public Error {
 public:
  using Error::Error;
};

// An operation that requires an arbitrage-free market got a market
// without an equivalent martingale measure.
class NotViable : public Error {
 public:
  using Error::Error;
};

// A mathematically unreachable branch was taken. Always an internal bug
// or a caller that broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Randomized search gave up after its bounded number of attempts.
class RetryLimitExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace martpoly
