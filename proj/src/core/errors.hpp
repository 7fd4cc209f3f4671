#pragma once

#include <stdexcept>
#include <string>

namespace affedit {

// Error taxonomy used across modules. Every user-facing failure maps to one
// of these so the CLI can emit a machine-readable error class.

struct Error : std::runtime_error {
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind(std::move(kind)) {}
    std::string kind;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& msg) : Error("invalid-input", msg) {}
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& msg) : Error("invalid-config", msg) {}
};

struct InvalidStep : Error {
    explicit InvalidStep(const std::string& msg) : Error("invalid-step", msg) {}
};

struct EmptyBatch : Error {
    explicit EmptyBatch(const std::string& msg) : Error("empty-batch", msg) {}
};

struct SupervisionUnavailable : Error {
    explicit SupervisionUnavailable(const std::string& msg)
        : Error("supervision-unavailable", msg) {}
};

struct TrainingDiverged : Error {
    explicit TrainingDiverged(const std::string& msg) : Error("training-diverged", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io-error", msg) {}
};

}  // namespace affedit
