#pragma once

#include <stdexcept>
#include <string>

namespace madiff {

// Error taxonomy. Callers that need to map failures onto process exit codes
// (see tools/) catch these by base class.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed an argument outside the documented domain.
struct ParameterError : Error {
    using Error::Error;
};

// A numeric operation would divide by (or take a root of) a value too close
// to zero to be meaningful, e.g. predicting x0 at alpha_bar == 0.
struct SingularityError : Error {
    using Error::Error;
};

// Bad or inconsistent configuration (schedules, mixtures, CLI configs).
struct ConfigError : Error {
    using Error::Error;
};

// Training diverged or could not make progress; message carries diagnostics.
struct TrainingError : Error {
    using Error::Error;
};

// An object was used before the state it depends on was produced
// (e.g. a blend step asked for a trajectory entry that was never stored).
struct StateError : Error {
    using Error::Error;
};

// On-disk data failed validation (corrupt checkpoint, bad PNG, bad JSON).
struct FormatError : Error {
    using Error::Error;
};

// Filesystem / network trouble: missing paths, unwritable dirs, timeouts.
struct IoError : Error {
    using Error::Error;
};

} // namespace madiff
