#pragma once

#include <stdexcept>
#include <string>

namespace refractor {

enum class ErrorKind {
    InvalidArgument,
    NonPositiveDiscriminant,
    DegenerateNormal,
    TotalInternalReflection,
    H1Violated,
    H2Violated,
    R0TooLarge,
    InvalidScene,
    EnergyMismatch,
    InadmissibleVector,
    QuantizationTooCoarse,
    FloorReached,
    MaxGroupsExceeded,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonPositiveDiscriminant: return "NonPositiveDiscriminant";
    case ErrorKind::DegenerateNormal: return "DegenerateNormal";
    case ErrorKind::TotalInternalReflection: return "TotalInternalReflection";
    case ErrorKind::H1Violated: return "H1Violated";
    case ErrorKind::H2Violated: return "H2Violated";
    case ErrorKind::R0TooLarge: return "R0TooLarge";
    case ErrorKind::InvalidScene: return "InvalidScene";
    case ErrorKind::EnergyMismatch: return "EnergyMismatch";
    case ErrorKind::InadmissibleVector: return "InadmissibleVector";
    case ErrorKind::QuantizationTooCoarse: return "QuantizationTooCoarse";
    case ErrorKind::FloorReached: return "FloorReached";
    case ErrorKind::MaxGroupsExceeded: return "MaxGroupsExceeded";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to a stable exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace refractor
