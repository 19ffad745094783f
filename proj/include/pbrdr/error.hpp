#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pbrdr {

enum class ErrorKind {
    NonConvergence,
    UnboundedObjective,
    DegenerateData,
    DegenerateWeights,
    Separation,
    RankDeficient,
    PositivityViolation,
    DomainError,
    DimensionError,
    ConfigError,
    IoError,
};

constexpr std::string_view error_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::UnboundedObjective: return "UnboundedObjective";
        case ErrorKind::DegenerateData: return "DegenerateData";
        case ErrorKind::DegenerateWeights: return "DegenerateWeights";
        case ErrorKind::Separation: return "Separation";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::PositivityViolation: return "PositivityViolation";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::DimensionError: return "DimensionError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

// Numerical failures (solver, data) are distinguished from input errors
// (config, IO, dimensions) by the CLI exit-code contract.
constexpr bool is_input_error(ErrorKind kind) {
    return kind == ErrorKind::ConfigError || kind == ErrorKind::IoError ||
           kind == ErrorKind::DimensionError;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return error_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace pbrdr
