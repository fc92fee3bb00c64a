#pragma once

#include <stdexcept>
#include <string>

namespace lmshoot {

/// Bad user input: configuration values, unknown keys, malformed specs.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not deliver its contract (step exhaustion,
/// bracket failure, degenerate polar data). The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function, e.g. phi(s) with |s| >= 1.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace lmshoot
