#pragma once

#include <stdexcept>
#include <string>

namespace schelling {

/// Invalid model or run parameters (bad L, p, horizon, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's precondition (e.g. evaluating a swap for a satisfied initiator).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An internal invariant of the dynamics failed at run time.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The exact state space is larger than the configured limit.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

} // namespace schelling
