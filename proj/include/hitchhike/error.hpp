#pragma once

#include <stdexcept>
#include <string>

namespace hitchhike {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A dataset that contained rows, none of which were well-formed.
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or schema violation. `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class TransportError : public Error {
public:
    using Error::Error;
};

/// Traceroute never elicited a single reply.
class UnreachableError : public Error {
public:
    using Error::Error;
};

/// Fewer than two responsive hops: the satellite segment cannot be bracketed.
class InsufficientVisibilityError : public Error {
public:
    using Error::Error;
};

/// Latency jump between the last two responsive hops is below the satellite threshold.
class NoSatelliteJumpError : public Error {
public:
    using Error::Error;
};

class EmptySeriesError : public Error {
public:
    using Error::Error;
};

/// No satellite is jointly visible to the sites involved.
class NoCoverageError : public Error {
public:
    using Error::Error;
};

class IncompatibleMapsError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

} // namespace hitchhike
