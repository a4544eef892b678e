#pragma once

#include <stdexcept>
#include <string>

namespace nowcast {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Value outside a function's mathematical domain (e.g. log of a nonpositive level).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input too short for the requested transform.
class LengthError : public Error {
public:
    using Error::Error;
};

/// Requested period or window not covered by the available data.
class CoverageError : public Error {
public:
    using Error::Error;
};

/// Rank-deficient or unbounded regression design.
class SingularDesignError : public Error {
public:
    using Error::Error;
};

/// An entity contributes too few rows to identify its fixed effect.
class DegenerateEntityError : public Error {
public:
    using Error::Error;
};

class UnknownEntityError : public Error {
public:
    using Error::Error;
};

class UnknownVariableError : public Error {
public:
    using Error::Error;
};

/// Quantile inputs out of order.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; the message carries file and line.
class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Score requested over rows lacking a realized value or prediction.
class ScoringError : public Error {
public:
    using Error::Error;
};

}  // namespace nowcast
