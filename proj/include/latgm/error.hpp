#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latgm {

// Base of every error raised by the library. Subclasses map onto the CLI's
// exit-code table (see tools/).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A precondition on the values (not shapes) of an input was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class FactorizationError : public NumericError {
public:
    FactorizationError(const std::string& what, std::size_t pivot)
        : NumericError(what + " (failing pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class RankError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateInputError : public ContractError {
public:
    using ContractError::ContractError;
};

class InfeasibleHidingError : public Error {
public:
    using Error::Error;
};

class UndefinedPowerError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace latgm
