#pragma once

#include <stdexcept>
#include <string>

namespace css {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Quadrature failed to converge or a probability left [0,1] by more than rounding.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation invoked on an object that is not ready (e.g. history still warming up).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A run finished without observing both hypotheses.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace css
