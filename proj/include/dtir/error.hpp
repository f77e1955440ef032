// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dtir {

// Base class so callers can catch everything from this library in one clause.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not conform (rank, dims, kernel size, divisibility).
struct ShapeError : Error {
    using Error::Error;
};

// An op produced a non-finite value, or numeric domain was violated.
struct NumericsError : Error {
    using Error::Error;
};

// API contract broken: backward on non-scalar, missing gradient, bad timestep.
struct ContractError : Error {
    using Error::Error;
};

// Invalid noise-schedule parameters or violated schedule invariant.
struct ScheduleError : Error {
    using Error::Error;
};

// Configuration file problems.
struct ConfigError : Error {
    using Error::Error;
};
struct UnknownKey : ConfigError {
    explicit UnknownKey(const std::string& key) : ConfigError("unknown config key: " + key), key(key) {}
    std::string key;
};
struct RangeError : ConfigError {
    RangeError(const std::string& key, const std::string& why)
        : ConfigError("config key '" + key + "' out of range: " + why), key(key) {}
    std::string key;
};

// Checkpoint container problems.
struct CheckpointError : Error {
    using Error::Error;
};
struct CrcMismatch : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct MalformedContainer : CheckpointError {
    using CheckpointError::CheckpointError;
};

}  // namespace dtir
