#pragma once
// Error taxonomy. Everything thrown by the library derives from Error so
// callers can catch one type at the CLI boundary.

#include <stdexcept>
#include <string>

namespace mmfuse {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// data / parsing
struct ParseError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct UnknownArtist : Error {
    using Error::Error;
};
struct MissingPopularity : Error {
    using Error::Error;
};
struct MissingEmbedding : Error {
    using Error::Error;
};

// numerics / shapes
struct ShapeMismatch : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};

// configuration / training
struct ConfigError : Error {
    using Error::Error;
};
struct IncompleteCoverage : Error {
    using Error::Error;
};
struct NoModalityAvailable : Error {
    using Error::Error;
};
struct InsufficientModalities : Error {
    using Error::Error;
};
struct UnfittedProjector : Error {
    using Error::Error;
};

// evaluation
struct UnassignedArtist : Error {
    using Error::Error;
};
struct InsufficientData : Error {
    using Error::Error;
};
struct UnknownReference : Error {
    using Error::Error;
};

}  // namespace mmfuse
