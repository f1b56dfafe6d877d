#ifndef KCRF_ERRORS_HPP
#define KCRF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kcrf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix dimensions between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Bad input data (non-finite score, label outside alphabet, empty dataset, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Malformed file content; carries path and 1-based line number when known.
class ParseError : public Error {
public:
    using Error::Error;
    ParseError(const std::string& path, long line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what) {}
};

/// Numerical failure (singular system, degenerate kernel, overflow).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace kcrf

#endif
