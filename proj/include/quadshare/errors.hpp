#pragma once

#include <stdexcept>
#include <string>

namespace quadshare {

// Base class for everything the engine can raise at runtime. The CLI maps
// EngineError to exit code 1 and usage/IO problems to exit code 2.
struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed-point encode received a value outside the representable range.
struct OverflowError : EngineError {
    using EngineError::EngineError;
};

// Incompatible tensor shapes (broadcasting, dot dimensions, ...).
struct ShapeError : EngineError {
    using EngineError::EngineError;
};

// Input outside the documented domain of a numerical routine.
struct DomainError : EngineError {
    using EngineError::EngineError;
};

// Reduction over an empty axis.
struct EmptyAxisError : EngineError {
    using EngineError::EngineError;
};

// A party tried to receive a message that was never sent.
struct DeadlockError : EngineError {
    using EngineError::EngineError;
};

// Static checking rejected a program (e.g. branch on a private condition).
struct RejectionError : EngineError {
    using EngineError::EngineError;
};

// File IO failure (missing file, malformed tensor container, ...).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace quadshare
