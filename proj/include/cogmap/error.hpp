#pragma once

#include <stdexcept>
#include <string>

namespace cogmap {

// Base class for all library errors. The CLI maps concrete types to exit
// codes: UsageError -> 2, FormatError -> 3, ContractError (and subclasses)
// -> 4, VerifyError -> 5.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad command line, bad config file key, unknown suite name.
class UsageError : public Error {
public:
    using Error::Error;
};

// Malformed or unreadable files (bad magic, truncation, dimension overflow,
// I/O failures).
class FormatError : public Error {
public:
    using Error::Error;
};

// Precondition or invariant violation: shape mismatches, empty bins,
// out-of-range voxel indices.
class ContractError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration (indivisible head dims, mismatched rope pairs).
class ConfigError : public ContractError {
public:
    using ContractError::ContractError;
};

// No token passed the confidence threshold; map construction aborts.
class NoConfidentGeometryError : public ContractError {
public:
    using ContractError::ContractError;
};

// Scene synthesis could not satisfy its placement constraints.
class GenerationError : public ContractError {
public:
    using ContractError::ContractError;
};

// A verification suite found a failure.
class VerifyError : public Error {
public:
    using Error::Error;
};

} // namespace cogmap
