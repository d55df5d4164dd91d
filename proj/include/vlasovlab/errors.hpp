#pragma once

#include <stdexcept>
#include <string>

namespace vlasovlab {

/// Caller violated a precondition (bad dimension, size guard, bad parameter).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Experiment configuration is malformed; `field()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Runtime failure of a simulation or integration (explosion guard, non-finite state).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing an experiment file failed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model variant does not support the requested operation.
class UnsupportedVariant : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace vlasovlab
