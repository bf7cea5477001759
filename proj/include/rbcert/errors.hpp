#pragma once

#include <stdexcept>
#include <string>

namespace rbcert {

/// Malformed or out-of-contract input (dimension mismatch, bad config, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical precondition failed at run time, e.g. a factorization broke
/// down because the operator lost coercivity at some parameter.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rbcert
