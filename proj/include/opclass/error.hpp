#pragma once

#include <stdexcept>
#include <string>

namespace opclass {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem access failed (unreadable root, unwritable destination, ...).
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input: bad UTF-8, corrupt dataset file, unparseable results.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Caller passed arguments that violate an operation's preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace opclass
