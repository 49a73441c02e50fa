#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mnn {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or range violation on a caller-supplied argument.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A computation produced NaN or infinity.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed binary stream (MNN1 / MLP1 containers).
class FormatError : public Error {
public:
    enum class Kind { VersionMismatch, Truncated, InconsistentHeader };

    FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Bad input record in a data file. `line()` is 1-based, 0 when not applicable.
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Run-configuration problem (parse error, missing or conflicting field).
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

} // namespace detail
} // namespace mnn
