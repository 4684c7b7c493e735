#pragma once

#include <stdexcept>
#include <string>

namespace riccati {

/// Input outside the mathematical domain of an operation (alpha <= 1, t < 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent or out-of-range configuration (grid sizes, precision tiers).
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that cannot produce a trustworthy number: overflow during
/// operator assembly, a vanishing denominator, a degenerate nullspace.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace riccati
