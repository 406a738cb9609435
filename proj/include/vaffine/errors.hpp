#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace vaffine {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A log-MGF argument fell outside the convergence strip of some coordinate.
/// When raised from inside a recursion the offending time index is attached.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what, std::optional<int> time_index = std::nullopt)
        : Error(time_index ? what + " (time index " + std::to_string(*time_index) + ")" : what),
          time_index_(time_index) {}

    [[nodiscard]] std::optional<int> time_index() const noexcept { return time_index_; }

private:
    std::optional<int> time_index_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class NegativeIncrementError : public Error {
public:
    using Error::Error;
};

class NonpositivePriceError : public Error {
public:
    using Error::Error;
};

class UnsupportedCopulaError : public Error {
public:
    using Error::Error;
};

class UnsupportedContractError : public Error {
public:
    using Error::Error;
};

class BracketError : public Error {
public:
    using Error::Error;
};

class ModeError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration (bad JSON, missing field, bad value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace vaffine
