#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdtrack {

enum class ErrorKind {
    DegenerateConfiguration,
    PointAtInfinity,
    DimensionMismatch,
    NumericalUnderflow,
    SingularScale,
    CoincidentTargets,
    ModeExplosion,
    EmptyCluster,
    MissingReferenceHistogram,
    DegenerateWeights,
    EmptyBirthCluster,
    NoGroundTruth,
    NoMatches,
    EmptyInterval,
    NoOverlap,
    ConfigInvalid,
    MalformedInput,
    Io,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::PointAtInfinity: return "PointAtInfinity";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorKind::SingularScale: return "SingularScale";
    case ErrorKind::CoincidentTargets: return "CoincidentTargets";
    case ErrorKind::ModeExplosion: return "ModeExplosion";
    case ErrorKind::EmptyCluster: return "EmptyCluster";
    case ErrorKind::MissingReferenceHistogram: return "MissingReferenceHistogram";
    case ErrorKind::DegenerateWeights: return "DegenerateWeights";
    case ErrorKind::EmptyBirthCluster: return "EmptyBirthCluster";
    case ErrorKind::NoGroundTruth: return "NoGroundTruth";
    case ErrorKind::NoMatches: return "NoMatches";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace crowdtrack
