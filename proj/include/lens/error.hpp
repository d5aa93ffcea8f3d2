#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lens {

enum class ErrorKind {
    UnknownCustomer,
    EmptyRoute,
    ParseError,
    InconsistentDepot,
    InfeasibleCustomer,
    DegenerateCount,
    TooFewRoutes,
    WarmStartInfeasible,
    ExternalFailure,
    NotInNeighborhood,
    EmptySequence,
    SingleClass,
    DimensionMismatch,
    VersionMismatch,
    CorruptModel,
    InfeasibleInitial,
    DegenerateBaseline,
    NoImprovingIterations,
    LengthMismatch,
    InvalidArgument,
    IoError,
};

std::string_view to_string(ErrorKind kind);

// Every recoverable failure in the library surfaces as this exception; the
// kind is what callers branch on, the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace lens
