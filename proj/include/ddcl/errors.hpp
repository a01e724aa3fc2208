#pragma once

#include <stdexcept>
#include <string>

namespace ddcl {

// Error taxonomy shared by all modules. Everything derives from Error so
// the CLI can map library failures onto its exit-code convention.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed numeric input.
struct InvalidInput : Error {
    using Error::Error;
};

// Operand dimensions disagree.
struct ShapeError : Error {
    using Error::Error;
};

// A row with (near-)zero L2 norm where a direction is required.
struct DegenerateVector : Error {
    using Error::Error;
};

// Disentangling ratio produced an empty DIR or DVR block.
struct InvalidRatio : Error {
    using Error::Error;
};

// A referenced (instance, view) record is absent from a bank/store.
struct LookupError : Error {
    using Error::Error;
};

// File parsing / serialization failures; message carries offsets when known.
struct IoError : Error {
    using Error::Error;
};

// Experiment config rejected during validation (exit code 2 in the CLI).
struct ConfigError : Error {
    using Error::Error;
};

// Runtime failure inside a training loop (non-finite loss etc.).
struct TrainingError : Error {
    using Error::Error;
};

} // namespace ddcl
