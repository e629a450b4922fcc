#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace adaptrial {

/// Invalid configuration: dimension mismatch, out-of-range parameter, unknown key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// ConfigError tied to one named field (e.g. "sd", "bf.threshold").
class FieldConfigError : public ConfigError {
public:
    FieldConfigError(std::string field, const std::string& message)
        : ConfigError(field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Broken numerical invariant (non-finite result, non-positive forecast variance).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of a function.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace adaptrial
