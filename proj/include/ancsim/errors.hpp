#pragma once

#include <stdexcept>
#include <string>

namespace ancsim {

/// Invalid or inconsistent configuration (bad parameter, missing path, schema violation).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A NaN/Inf showed up in a signal or in adaptive weights.
class NumericFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation was called in a state that does not allow it (e.g. running without calibration).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class AliasingError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class CalibrationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ancsim
