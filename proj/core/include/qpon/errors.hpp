#pragma once

#include <stdexcept>
#include <string>

namespace qpon {

// Exit codes used by the command-line front end. Each exception family maps to one.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    calibration = 3,
    resource = 4,
    physics = 5,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept = 0;
};

class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

class TopologyError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class CalibrationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::calibration; }
};

class ResourceError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::resource; }
};

// Physics-domain violations: wavelengths off the profile, QBER outside [0, 0.5), etc.
class DomainError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::physics; }
};

class InsufficientStatistics : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace qpon
