#pragma once

#include <stdexcept>
#include <string>

namespace thermoeq {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A system, force-field, thermostat, or run configuration violates a documented invariant.
struct ValidationError : Error {
    using Error::Error;
};

/// Config file is syntactically malformed or contains an unknown section/key.
struct ParseError : Error {
    ParseError(const std::string& what, int line_no)
        : Error(what), line(line_no) {}
    int line;
};

/// File could not be read or written.
struct IoError : Error {
    using Error::Error;
};

/// |p|^2 fell below the representable floor; thermostat coefficients are undefined.
struct ZeroMomentumError : Error {
    using Error::Error;
};

/// Requested total energy lies below the potential energy of every sampled configuration.
struct InfeasibleEnergyError : Error {
    using Error::Error;
};

/// A single step required more wall reflections than the hard cap allows.
struct MaxReflectionsError : Error {
    using Error::Error;
};

/// Series too short for the requested number of blocks.
struct TooShortError : Error {
    using Error::Error;
};

/// Trajectory never settled under the certified energy bound.
struct TransientNotEndedError : Error {
    using Error::Error;
};

/// Tangent frame collapsed: QR produced a numerically zero diagonal entry.
struct DegenerateFrameError : Error {
    using Error::Error;
};

} // namespace thermoeq
