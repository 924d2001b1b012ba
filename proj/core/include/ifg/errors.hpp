#pragma once

#include <stdexcept>
#include <string>

namespace ifg {

// Invalid configuration value or shape mismatch detected before any work runs.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad runtime argument: label out of range, index out of bounds, empty input.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or incompatible on-disk artifact (checkpoint, dataset, partition file).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage was invoked before the stage it depends on produced its outputs.
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse that violates a documented contract (e.g. backing a tape twice).
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Training hit a non-recoverable numeric failure; message carries the step dossier.
struct TrainingAborted : std::runtime_error {
    explicit TrainingAborted(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ifg
